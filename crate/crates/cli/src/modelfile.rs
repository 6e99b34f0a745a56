//! TOML model files.
//!
//! States are named and ordered; transitions refer to successors by name.
//! Costs and ground-truth entries accept `inf`/`-inf`, either as TOML float
//! literals or as strings.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use totalcost::model::{AffineFamily, AffineTransition, AtomicControl, Interval, StateSpec};
use totalcost::solvers::GroundTruth;
use totalcost::{ExtReal, QVector, Regime, TotalCostModel, ValueVector};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub regime: Regime,
    pub discount: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_bound: Option<f64>,
    pub states: Vec<StateEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruthEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub controls: Vec<ControlEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub families: Vec<FamilyEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlEntry {
    pub id: String,
    pub cost: ExtReal,
    pub transitions: Vec<TransitionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEntry {
    pub state: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyEntry {
    pub id: String,
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
    pub cost: [f64; 2],
    pub transitions: Vec<AffineTransitionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineTransitionEntry {
    pub state: String,
    pub p0: f64,
    pub p1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    #[serde(rename = "Jstar")]
    pub jstar: Vec<ExtReal>,
    #[serde(rename = "Qstar", default, skip_serializing_if = "Option::is_none")]
    pub qstar: Option<Vec<ExtReal>>,
}

/// How unknown keys are treated while parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    Strict,
    Warn,
}

/// A parsed model file plus the keys that were ignored in warn mode.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub file: ModelFile,
    pub ignored: Vec<String>,
}

/// Parses a model file. Errors carry the line and column of the problem.
pub fn parse(text: &str, strictness: Strictness) -> Result<Parsed> {
    let mut ignored = Vec::new();
    let de = toml::Deserializer::parse(text).map_err(|e| anyhow!("{e}"))?;
    let file: ModelFile =
        serde_ignored::deserialize(de, |path| ignored.push(path.to_string())).map_err(|e| anyhow!("{e}"))?;
    if strictness == Strictness::Strict && !ignored.is_empty() {
        bail!("unknown field(s): {}", ignored.join(", "));
    }
    check_version(&file)?;
    Ok(Parsed { file, ignored })
}

fn check_version(file: &ModelFile) -> Result<()> {
    if file.format_version != FORMAT_VERSION {
        bail!("unsupported format_version {} (expected {FORMAT_VERSION})", file.format_version);
    }
    Ok(())
}

pub fn render(file: &ModelFile) -> Result<String> {
    toml::to_string(file).context("rendering model file")
}

impl ModelFile {
    /// Builds the in-memory model. Structural problems (unknown successor
    /// names, duplicate state names) are errors; semantic invariants are left
    /// to `validate_model`.
    pub fn to_model(&self) -> Result<TotalCostModel> {
        let index = |name: &str, from: &str| -> Result<usize> {
            self.states
                .iter()
                .position(|s| s.name == name)
                .ok_or_else(|| anyhow!("state `{from}` has a transition to unknown state `{name}`"))
        };
        for (i, s) in self.states.iter().enumerate() {
            if self.states[..i].iter().any(|t| t.name == s.name) {
                bail!("duplicate state name `{}`", s.name);
            }
        }
        let mut specs = Vec::with_capacity(self.states.len());
        for s in &self.states {
            let controls = s
                .controls
                .iter()
                .map(|c| {
                    let transitions =
                        c.transitions.iter().map(|t| Ok((index(&t.state, &s.name)?, t.prob))).collect::<Result<Vec<_>>>()?;
                    Ok(AtomicControl { label: c.id.clone(), cost: c.cost, transitions })
                })
                .collect::<Result<Vec<_>>>()?;
            let families = s
                .families
                .iter()
                .map(|f| {
                    let transitions = f
                        .transitions
                        .iter()
                        .map(|t| Ok(AffineTransition { state: index(&t.state, &s.name)?, p0: t.p0, p1: t.p1 }))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(AffineFamily {
                        label: f.id.clone(),
                        interval: Interval { lo: f.lo, hi: f.hi, lo_closed: f.lo_closed, hi_closed: f.hi_closed },
                        cost: f.cost,
                        transitions,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            specs.push(StateSpec { name: s.name.clone(), controls, families });
        }
        let model = TotalCostModel::new(self.regime, self.discount, specs)?;
        Ok(match self.cost_bound {
            Some(b) => model.with_cost_bound(b),
            None => model,
        })
    }

    pub fn ground_truth(&self, model: &TotalCostModel) -> Result<Option<GroundTruth>> {
        let Some(g) = &self.ground_truth else { return Ok(None) };
        if g.jstar.len() != model.num_states() {
            bail!("ground_truth.Jstar has {} entries for {} states", g.jstar.len(), model.num_states());
        }
        if let Some(q) = &g.qstar {
            if q.len() != model.num_pairs() {
                bail!("ground_truth.Qstar has {} entries for {} state-control pairs", q.len(), model.num_pairs());
            }
        }
        Ok(Some(GroundTruth { jstar: ValueVector(g.jstar.clone()), qstar: g.qstar.clone().map(QVector) }))
    }

    pub fn from_model(model: &TotalCostModel, jstar: Option<&ValueVector>, qstar: Option<&QVector>) -> Self {
        let name = |y: usize| model.state(y).name.clone();
        let states = model
            .states()
            .iter()
            .map(|s| StateEntry {
                name: s.name.clone(),
                controls: s
                    .controls
                    .iter()
                    .map(|c| ControlEntry {
                        id: c.label.clone(),
                        cost: c.cost,
                        transitions: c.transitions.iter().map(|&(y, p)| TransitionEntry { state: name(y), prob: p }).collect(),
                    })
                    .collect(),
                families: s
                    .families
                    .iter()
                    .map(|f| FamilyEntry {
                        id: f.label.clone(),
                        lo: f.interval.lo,
                        hi: f.interval.hi,
                        lo_closed: f.interval.lo_closed,
                        hi_closed: f.interval.hi_closed,
                        cost: f.cost,
                        transitions: f
                            .transitions
                            .iter()
                            .map(|t| AffineTransitionEntry { state: name(t.state), p0: t.p0, p1: t.p1 })
                            .collect(),
                    })
                    .collect(),
            })
            .collect();
        ModelFile {
            format_version: FORMAT_VERSION,
            regime: model.regime(),
            discount: model.discount(),
            cost_bound: model.cost_bound(),
            states,
            ground_truth: jstar.map(|j| GroundTruthEntry { jstar: j.0.clone(), qstar: qstar.map(|q| q.0.clone()) }),
        }
    }
}
