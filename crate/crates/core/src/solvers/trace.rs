use serde::{Deserialize, Serialize};

use crate::error::{BoundSide, Error, Result};
use crate::ext_real::serde_f64;
use crate::model::Regime;
use crate::vectors::{QVector, ValueVector};

/// A named boolean check recorded during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool) -> Self {
        Check { name: name.into(), passed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    /// `‖J_k − J_{k−1}‖∞` (the joint `(J, Q)` change for Q-factor methods).
    #[serde(with = "serde_f64")]
    pub residual: f64,
    #[serde(with = "serde_f64::option")]
    pub dist_j: Option<f64>,
    #[serde(with = "serde_f64::option")]
    pub dist_q: Option<f64>,
    pub policy: String,
    pub b: String,
    /// `J* ≤ J_k` (and `Q* ≤ Q_k` when `Q*` is known).
    pub above_optimal: Option<bool>,
    /// `J_k ≤ T^k(J_0)`.
    pub below_value_iterate: Option<bool>,
    /// Seconds since the start of the run.
    pub elapsed: f64,
    pub j: ValueVector,
    pub q: Option<QVector>,
    /// `M(Q_k)` before clamping for the mixed method, `T(J_k)` for modified
    /// policy iteration.
    pub improved: Option<ValueVector>,
    pub checks: Vec<Check>,
}

impl TraceRecord {
    pub fn new(k: usize, residual: f64, j: ValueVector) -> Self {
        TraceRecord {
            k,
            residual,
            dist_j: None,
            dist_q: None,
            policy: String::new(),
            b: String::new(),
            above_optimal: None,
            below_value_iterate: None,
            elapsed: 0.0,
            j,
            q: None,
            improved: None,
            checks: Vec::new(),
        }
    }

    pub fn check(&self, name: &str) -> Option<bool> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    /// Whole-vector operator applications (`T`, `T_μ`, `F_θ`, `H`, `M`).
    pub operator_applications: u64,
    /// Individual entries written by those applications.
    pub entry_updates: u64,
}

impl OpCounters {
    pub fn add(&mut self, applications: u64, entries: u64) {
        self.operator_applications += applications;
        self.entry_updates += applications * entries;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub algorithm: String,
    pub regime: Regime,
    pub j0: ValueVector,
    pub q0: Option<QVector>,
    /// Which side of the limit the iterates approach from, when monotone.
    pub bound: Option<BoundSide>,
    pub notes: Vec<Check>,
    pub counters: OpCounters,
    records: Vec<TraceRecord>,
}

impl IterationTrace {
    pub fn new(algorithm: impl Into<String>, regime: Regime, j0: ValueVector, q0: Option<QVector>) -> Self {
        IterationTrace {
            algorithm: algorithm.into(),
            regime,
            j0,
            q0,
            bound: None,
            notes: Vec::new(),
            counters: OpCounters::default(),
            records: Vec::new(),
        }
    }

    /// Appends a record; `k` must exceed that of the previous record.
    pub fn push(&mut self, record: TraceRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.k <= last.k {
                return Err(Error::InvalidArgument(format!(
                    "trace records must increase in k ({} after {})",
                    record.k, last.k
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn note(&self, name: &str) -> Option<bool> {
        self.notes.iter().find(|c| c.name == name).map(|c| c.passed)
    }

    /// Every `J_k`, starting with `J_0`.
    pub fn j_sequence(&self) -> Vec<ValueVector> {
        std::iter::once(self.j0.clone()).chain(self.records.iter().map(|r| r.j.clone())).collect()
    }
}
