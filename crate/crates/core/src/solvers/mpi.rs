use std::time::Instant;

use crate::error::{check_len, Error, Result};
use crate::evaluation::policy_cost;
use crate::model::{Regime, TotalCostModel};
use crate::operators::{bellman_t, bellman_t_mu, greedy_select, h_backup, m_minimize, TieBreak};
use crate::policy::Policy;
use crate::vectors::ValueVector;

use super::{annotate, cone_constant, residual_done, Check, IterationTrace, NSchedule, SolverConfig, TraceRecord};

/// `T_{μ_0}(J_0) ≤ J_0`.
pub const NOTE_MPI_DECREASE: &str = "initial_policy_decrease";
/// `T^n(J_0) ≤ c J*` for some finite `c`.
pub const NOTE_MPI_CONE: &str = "initial_within_cone";

#[derive(Debug, Clone, PartialEq)]
pub struct MpiOutcome {
    pub trace: IterationTrace,
    pub j: ValueVector,
    pub policy: Policy,
}

/// Modified policy iteration: `J_{k+1} = T_{μ_k}^{n_k}(J_k)` followed by
/// exact greedy improvement `μ_{k+1}` from `H(J_{k+1})`. Without `mu0`
/// the first policy is greedy for `H(J_0)`.
///
/// Each record stores `J_{k}` and, as `improved`, `T(J_k)`.
pub fn modified_policy_iteration(
    model: &TotalCostModel,
    mu0: Option<&Policy>,
    j0: &ValueVector,
    schedule: &NSchedule,
    config: &SolverConfig,
) -> Result<MpiOutcome> {
    model.require_atomic("modified_policy_iteration")?;
    check_len(model.num_states(), j0.len())?;
    let started = Instant::now();
    let regime = model.regime();
    let np = model.num_pairs() as u64;
    let mut mu = match mu0 {
        Some(p) => {
            p.validate(model)?;
            p.clone()
        }
        None => greedy_select(model, &h_backup(model, j0)?, config.epsilon, TieBreak::LowestIndex)?,
    };
    let mut trace = IterationTrace::new("mpi", regime, j0.clone(), None);

    if let (Regime::Positive, Some(gt)) = (regime, &config.ground_truth) {
        let decrease = bellman_t_mu(model, &mu, j0)?.le(j0, config.order_slack);
        let mut tn = j0.clone();
        for _ in 0..schedule.at(0).unwrap_or(1) {
            tn = bellman_t(model, &tn)?;
        }
        trace.notes.push(Check::new(NOTE_MPI_DECREASE, decrease));
        trace.notes.push(Check::new(NOTE_MPI_CONE, cone_constant(&tn, &gt.jstar).is_ok()));
    }

    let mut j = j0.clone();
    let mut residual = f64::INFINITY;
    for k in 0..config.iteration_cap() {
        let next = match schedule.at(k) {
            Some(n) => {
                let mut w = j.clone();
                for _ in 0..n {
                    w = bellman_t_mu(model, &mu, &w)?;
                }
                trace.counters.add(n as u64, np);
                w
            }
            None => {
                trace.counters.add(1, np);
                policy_cost(model, &mu)?
            }
        };
        residual = next.dist(&j);
        let q = h_backup(model, &next)?;
        let improved = m_minimize(model, &q)?;
        trace.counters.add(2, np);
        let mut rec = TraceRecord::new(k + 1, residual, next.clone());
        rec.policy = mu.describe();
        rec.improved = Some(improved);
        annotate(&mut rec, config, started);
        trace.push(rec)?;
        j = next;
        mu = greedy_select(model, &q, config.epsilon, TieBreak::LowestIndex)?;
        if config.should_stop(k + 1, residual_done(regime, model.discount(), residual, config.tol)) {
            return Ok(MpiOutcome { trace, j, policy: mu });
        }
    }
    Err(Error::IterationCap {
        iterations: config.max_iter,
        residual,
        bound: crate::ftheta::monotone_side(regime),
        last: j.into_inner(),
    })
}
