use std::fmt;
use std::str::FromStr;

use crate::chain::occupation_measure;
use crate::error::{check_len, Error, Result};
use crate::ftheta::FixedPointOptions;
use crate::model::{Regime, TotalCostModel};
use crate::policy::Policy;
use crate::vectors::{QVector, StateSet, ValueVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    ValueIteration,
    PolicyIteration,
    ModifiedPolicyIteration,
    Mixed,
    LpVariant,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::ValueIteration,
        Algorithm::PolicyIteration,
        Algorithm::ModifiedPolicyIteration,
        Algorithm::Mixed,
        Algorithm::LpVariant,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Algorithm::ValueIteration => "vi",
            Algorithm::PolicyIteration => "pi",
            Algorithm::ModifiedPolicyIteration => "mpi",
            Algorithm::Mixed => "mixed",
            Algorithm::LpVariant => "lp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.code() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm `{s}` (expected vi, pi, mpi, mixed or lp)")))
    }
}

/// How many `F_θ` (or `T_μ`) applications make up one outer iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NSchedule {
    Constant(usize),
    /// `n_k` for `k = 0, 1, …`; the last entry repeats.
    List(Vec<usize>),
    /// Solve the inner problem exactly.
    Exact,
}

impl NSchedule {
    /// `Some(n_k)`, or `None` for the exact inner solve.
    pub fn at(&self, k: usize) -> Option<usize> {
        match self {
            NSchedule::Constant(n) => Some(*n),
            NSchedule::List(v) => Some(v[k.min(v.len() - 1)]),
            NSchedule::Exact => None,
        }
    }

    fn check(&self) -> Result<()> {
        let ok = match self {
            NSchedule::Constant(n) => *n >= 1,
            NSchedule::List(v) => !v.is_empty() && v.iter().all(|&n| n >= 1),
            NSchedule::Exact => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("every n_k must be at least 1".into()))
        }
    }
}

impl FromStr for NSchedule {
    type Err = Error;

    /// `exact`, a single count, or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(NSchedule::Exact);
        }
        let parsed: std::result::Result<Vec<usize>, _> = s.split(',').map(|p| p.trim().parse::<usize>()).collect();
        let v = parsed.map_err(|_| Error::InvalidArgument(format!("bad n_k schedule `{s}`")))?;
        let sched = if v.len() == 1 { NSchedule::Constant(v[0]) } else { NSchedule::List(v) };
        sched.check()?;
        Ok(sched)
    }
}

/// Choice of the set `B_k` on which the policy is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum BStrategy {
    Full,
    Empty,
    /// `B = {x : p(x) > threshold}` for the discounted occupation measure
    /// `p` of the current policy started from `rho`.
    OccupationSupport { rho: Vec<f64>, beta: f64, threshold: f64 },
    /// One set per iteration; the last one repeats.
    Custom(Vec<StateSet>),
    /// Sets chosen by `base`, with the policy replaced by `fallback`
    /// outside the chosen set.
    Splice { fallback: Policy, base: Box<BStrategy> },
}

impl BStrategy {
    pub fn select(&self, model: &TotalCostModel, policy: &Policy, k: usize) -> Result<StateSet> {
        let n = model.num_states();
        match self {
            BStrategy::Full => Ok(StateSet::full(n)),
            BStrategy::Empty => Ok(StateSet::empty(n)),
            BStrategy::OccupationSupport { rho, beta, threshold } => {
                let p = occupation_measure(model, policy, rho, *beta)?;
                Ok(StateSet(p.iter().map(|&v| v > *threshold).collect()))
            }
            BStrategy::Custom(sets) => {
                let b = sets[k.min(sets.len() - 1)].clone();
                check_len(n, b.universe())?;
                Ok(b)
            }
            BStrategy::Splice { base, .. } => base.select(model, policy, k),
        }
    }

    /// The policy actually used with `b`.
    pub fn adjust_policy(&self, policy: Policy, b: &StateSet) -> Policy {
        match self {
            BStrategy::Splice { fallback, .. } => policy.spliced(fallback, &b.0),
            _ => policy,
        }
    }

    fn check(&self, model: &TotalCostModel) -> Result<()> {
        match self {
            BStrategy::OccupationSupport { rho, beta, threshold } => {
                check_len(model.num_states(), rho.len())?;
                if !(*threshold >= 0.0) || !(0.0..1.0).contains(beta) {
                    return Err(Error::InvalidArgument("occupation support needs threshold ≥ 0 and β ∈ [0, 1)".into()));
                }
                Ok(())
            }
            BStrategy::Custom(sets) if sets.is_empty() => {
                Err(Error::InvalidArgument("custom B strategy needs at least one set".into()))
            }
            BStrategy::Splice { fallback, base } => {
                fallback.validate(model)?;
                base.check(model)
            }
            _ => Ok(()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            BStrategy::Full => "full".into(),
            BStrategy::Empty => "empty".into(),
            BStrategy::OccupationSupport { beta, threshold, .. } => format!("occupation(beta={beta},threshold={threshold})"),
            BStrategy::Custom(sets) => format!("custom({} sets)", sets.len()),
            BStrategy::Splice { base, .. } => format!("splice({})", base.describe()),
        }
    }
}

/// Masks for asynchronous updates.
#[derive(Debug, Clone, PartialEq)]
pub enum MaskSchedule {
    /// Iteration `k` updates the single pair `k mod |Γ|` and the single
    /// state `k mod |S|`.
    RoundRobin,
    /// `(pair mask, state mask)` per iteration, cycling.
    Cycle(Vec<(Vec<bool>, Vec<bool>)>),
}

impl MaskSchedule {
    pub fn masks(&self, model: &TotalCostModel, k: usize) -> (Vec<bool>, Vec<bool>) {
        match self {
            MaskSchedule::RoundRobin => {
                let (np, n) = (model.num_pairs(), model.num_states());
                let mut g = vec![false; np];
                let mut s = vec![false; n];
                g[k % np] = true;
                s[k % n] = true;
                (g, s)
            }
            MaskSchedule::Cycle(v) => v[k % v.len()].clone(),
        }
    }

    /// Iterations after which every pair and state has been touched.
    pub fn sweep_len(&self, model: &TotalCostModel) -> usize {
        match self {
            MaskSchedule::RoundRobin => model.num_pairs().max(model.num_states()),
            MaskSchedule::Cycle(v) => v.len(),
        }
    }
}

/// Known optimal costs used for distances, flags and certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub jstar: ValueVector,
    pub qstar: Option<QVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Defaults to zero.
    pub j0: Option<ValueVector>,
    /// Defaults to `H(J0)`.
    pub q0: Option<QVector>,
    /// Used as `μ_0` in place of the greedy choice.
    pub initial_policy: Option<Policy>,
    pub n_schedule: NSchedule,
    pub epsilon: f64,
    pub b_strategy: BStrategy,
    pub clamp_lo: Option<ValueVector>,
    pub clamp_hi: Option<ValueVector>,
    pub masks: Option<MaskSchedule>,
    pub max_iter: usize,
    /// Run exactly this many iterations, ignoring the residual test.
    pub fixed_iterations: Option<usize>,
    pub tol: f64,
    /// Slack for the recorded order checks.
    pub order_slack: f64,
    pub ground_truth: Option<GroundTruth>,
    /// Options for exact inner solves.
    pub inner: FixedPointOptions,
    /// Also compute `T^k(J0)` to record the upper sandwich flag.
    pub track_bounds: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algorithm: Algorithm::Mixed,
            j0: None,
            q0: None,
            initial_policy: None,
            n_schedule: NSchedule::Constant(10),
            epsilon: 0.0,
            b_strategy: BStrategy::Full,
            clamp_lo: None,
            clamp_hi: None,
            masks: None,
            max_iter: 1000,
            fixed_iterations: None,
            tol: 1e-10,
            order_slack: 0.0,
            ground_truth: None,
            inner: FixedPointOptions { tol: 1e-13, max_iter: 1_000_000 },
            track_bounds: true,
        }
    }
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        SolverConfig { algorithm, ..Default::default() }
    }

    pub fn validate(&self, model: &TotalCostModel) -> Result<()> {
        self.n_schedule.check()?;
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!("ε must be nonnegative, got {}", self.epsilon)));
        }
        if self.fixed_iterations == Some(0) {
            return Err(Error::InvalidArgument("a fixed iteration count must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max iterations must be positive".into()));
        }
        let n = model.num_states();
        for v in [&self.j0, &self.clamp_lo, &self.clamp_hi].into_iter().flatten() {
            check_len(n, v.len())?;
        }
        if let Some(q) = &self.q0 {
            check_len(model.num_pairs(), q.len())?;
        }
        if let (Some(lo), Some(hi)) = (&self.clamp_lo, &self.clamp_hi) {
            if let Some(x) = (0..n).find(|&x| lo[x] > hi[x]) {
                return Err(Error::InvalidArgument(format!("clamp bounds cross at state {x}: {} > {}", lo[x], hi[x])));
            }
        }
        if let Some(p) = &self.initial_policy {
            p.validate(model)?;
        }
        if let Some(MaskSchedule::Cycle(v)) = &self.masks {
            if v.is_empty() {
                return Err(Error::InvalidArgument("mask cycle is empty".into()));
            }
            for (g, s) in v {
                check_len(model.num_pairs(), g.len())?;
                check_len(n, s.len())?;
            }
        }
        if let Some(gt) = &self.ground_truth {
            check_len(n, gt.jstar.len())?;
            if let Some(q) = &gt.qstar {
                check_len(model.num_pairs(), q.len())?;
            }
        }
        self.b_strategy.check(model)
    }

    /// Rejects algorithm and model combinations that cannot run at all.
    pub fn check_applicable(&self, model: &TotalCostModel) -> Result<()> {
        if self.algorithm == Algorithm::LpVariant && model.regime() != Regime::Positive {
            return Err(Error::InvalidArgument(format!(
                "the LP variant needs a nonnegative-cost model, this one is regime {}",
                model.regime()
            )));
        }
        if self.algorithm != Algorithm::ValueIteration {
            model.require_atomic(self.algorithm.code())?;
        }
        Ok(())
    }

    /// Upper end of the outer loop.
    pub fn iteration_cap(&self) -> usize {
        self.fixed_iterations.unwrap_or(self.max_iter)
    }

    /// Whether to stop after `done` completed iterations.
    pub fn should_stop(&self, done: usize, converged: bool) -> bool {
        match self.fixed_iterations {
            Some(n) => done >= n,
            None => converged,
        }
    }

    pub fn initial_j(&self, model: &TotalCostModel) -> ValueVector {
        self.j0.clone().unwrap_or_else(|| ValueVector::zeros(model.num_states()))
    }

    /// `max{J̲, min{J̄, J}}`.
    pub fn clamp(&self, j: ValueVector) -> ValueVector {
        let mut j = j;
        if let Some(hi) = &self.clamp_hi {
            j.iter_mut().zip(hi.iter()).for_each(|(v, &h)| *v = (*v).min(h));
        }
        if let Some(lo) = &self.clamp_lo {
            j.iter_mut().zip(lo.iter()).for_each(|(v, &l)| *v = (*v).max(l));
        }
        j
    }
}
