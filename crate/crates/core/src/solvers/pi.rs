use std::collections::HashSet;
use std::time::Instant;

use crate::error::Result;
use crate::evaluation::policy_cost;
use crate::model::{Regime, TotalCostModel};
use crate::operators::{bellman_t_mu, greedy_choices, h_backup, m_minimize, TieBreak};
use crate::policy::Policy;
use crate::vectors::ValueVector;

use super::{annotate, IterationTrace, SolverConfig, TraceRecord};

/// Largest `‖T_μ J_μ − T J_μ‖∞` treated as "no improvement possible".
pub const STUCK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiTermination {
    /// `T_μ J_μ = T J_μ` and `J_μ` is known to be optimal: it matches the
    /// ground truth, or the regime is D.
    OptimalCertified,
    /// `T_μ J_μ = T J_μ` without a certificate of optimality.
    Stuck,
    Cap,
    /// The improvement step revisited an earlier policy.
    Cycle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiOutcome {
    pub policies: Vec<Policy>,
    pub values: Vec<ValueVector>,
    pub trace: IterationTrace,
    pub termination: PiTermination,
}

/// Exact policy iteration from `mu0`. The improvement step keeps the
/// current control wherever it already attains the minimum.
pub fn policy_iteration(model: &TotalCostModel, mu0: &Policy, config: &SolverConfig) -> Result<PiOutcome> {
    model.require_atomic("policy_iteration")?;
    mu0.validate(model)?;
    let started = Instant::now();
    let mut mu = mu0.clone();
    let mut policies = Vec::new();
    let mut values: Vec<ValueVector> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    if let Some(c) = mu.choices() {
        seen.insert(c);
    }
    let mut trace: Option<IterationTrace> = None;

    for k in 0..config.iteration_cap() {
        let j = policy_cost(model, &mu)?;
        let q = h_backup(model, &j)?;
        let tj = m_minimize(model, &q)?;
        let tmu = bellman_t_mu(model, &mu, &j)?;
        let trace = trace.get_or_insert_with(|| IterationTrace::new("pi", model.regime(), j.clone(), None));
        trace.counters.add(3, model.num_pairs() as u64);

        let residual = values.last().map_or(f64::INFINITY, |prev| prev.dist(&j));
        let mut rec = TraceRecord::new(k, residual, j.clone());
        rec.policy = mu.describe();
        rec.improved = Some(tj.clone());
        annotate(&mut rec, config, started);
        trace.push(rec)?;
        policies.push(mu.clone());
        values.push(j.clone());

        if tmu.dist(&tj) <= STUCK_TOL {
            let certified = match &config.ground_truth {
                Some(gt) => j.dist(&gt.jstar) <= config.tol,
                None => model.regime() == Regime::Discounted,
            };
            let termination = if certified { PiTermination::OptimalCertified } else { PiTermination::Stuck };
            return Ok(PiOutcome { policies, values, trace: trace.clone(), termination });
        }

        let mut choices = greedy_choices(model, &q, 0.0, TieBreak::LowestIndex)?;
        for (x, c) in choices.iter_mut().enumerate() {
            if let Some(cur) = mu.deterministic_choice(x) {
                if q.at(model, x, cur) <= tj[x] {
                    *c = cur;
                }
            }
        }
        if !seen.insert(choices.clone()) {
            return Ok(PiOutcome { policies, values, trace: trace.clone(), termination: PiTermination::Cycle });
        }
        mu = Policy::deterministic(model, &choices);
    }
    let trace = trace.unwrap_or_else(|| IterationTrace::new("pi", model.regime(), ValueVector::zeros(model.num_states()), None));
    Ok(PiOutcome { policies, values, trace, termination: PiTermination::Cap })
}
