//! Iterative solvers and their traces.
//!
//! Every solver records one [`TraceRecord`] per outer iteration. When the
//! configuration carries ground truth, records also hold distances to
//! `(J*, Q*)` and the order flags used by [`verify_certificates`].

mod certificates;
mod config;
mod extract;
mod lp_variant;
mod mixed;
mod mpi;
mod pi;
mod trace;
mod vi;

use std::time::Instant;

pub use certificates::{
    cone_constant, verify_certificates, CertificateCheck, CertificateReport, CHECK_CONE, CHECK_CONVERGENCE,
    CHECK_GEOMETRIC_RATE, CHECK_INITIAL_DOMINANCE, CHECK_MEMBERSHIP, CHECK_SANDWICH,
};
pub use config::{Algorithm, BStrategy, GroundTruth, MaskSchedule, NSchedule, SolverConfig};
pub use extract::{build_n_stage_policy, extract_policy_discounted, NStagePolicy};
pub use lp_variant::{lp_variant_vpi, LpVariantOutcome, CHECK_LP_LOWER, CHECK_LP_UPPER, CHECK_WITHIN_CONE};
pub use mixed::{mixed_vpi, MixedOutcome};
pub use mpi::{modified_policy_iteration, MpiOutcome, NOTE_MPI_DECREASE, NOTE_MPI_CONE};
pub use pi::{policy_iteration, PiOutcome, PiTermination, STUCK_TOL};
pub use trace::{Check, IterationTrace, OpCounters, TraceRecord};
pub use vi::{value_iteration, NOTE_NONDECREASING, NOTE_NONINCREASING};

use crate::error::Result;
use crate::model::{Regime, TotalCostModel};
use crate::operators::{greedy_select, h_backup, TieBreak};
use crate::policy::Policy;
use crate::vectors::{QVector, ValueVector};

/// Final state of any solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub trace: IterationTrace,
    pub j: ValueVector,
    pub q: Option<QVector>,
    pub policy: Option<Policy>,
    pub termination: Option<PiTermination>,
}

/// Runs the algorithm named in `config`.
pub fn run(model: &TotalCostModel, config: &SolverConfig) -> Result<RunOutcome> {
    config.check_applicable(model)?;
    config.validate(model)?;
    match config.algorithm {
        Algorithm::ValueIteration => {
            let (j, trace) = value_iteration(model, &config.initial_j(model), config)?;
            Ok(RunOutcome { trace, j, q: None, policy: None, termination: None })
        }
        Algorithm::PolicyIteration => {
            let mu0 = match &config.initial_policy {
                Some(p) => p.clone(),
                None => greedy_select(model, &h_backup(model, &config.initial_j(model))?, 0.0, TieBreak::LowestIndex)?,
            };
            let out = policy_iteration(model, &mu0, config)?;
            Ok(RunOutcome {
                j: out.values.last().cloned().unwrap_or_else(|| ValueVector::zeros(model.num_states())),
                policy: out.policies.last().cloned(),
                termination: Some(out.termination),
                trace: out.trace,
                q: None,
            })
        }
        Algorithm::ModifiedPolicyIteration => {
            let out = modified_policy_iteration(
                model,
                config.initial_policy.as_ref(),
                &config.initial_j(model),
                &config.n_schedule,
                config,
            )?;
            Ok(RunOutcome { trace: out.trace, j: out.j, q: None, policy: Some(out.policy), termination: None })
        }
        Algorithm::Mixed => {
            let out = mixed_vpi(model, config)?;
            Ok(RunOutcome {
                j: out.js.last().cloned().expect("at least J0"),
                q: out.qs.last().cloned(),
                policy: out.policies.last().cloned(),
                trace: out.trace,
                termination: None,
            })
        }
        Algorithm::LpVariant => {
            let out = lp_variant_vpi(model, config)?;
            Ok(RunOutcome { trace: out.trace, j: out.j, q: Some(out.q), policy: None, termination: None })
        }
    }
}

/// Whether an outer loop with residual `r` may stop.
pub(crate) fn residual_done(regime: Regime, alpha: f64, r: f64, tol: f64) -> bool {
    r == 0.0
        || match regime {
            Regime::Discounted => alpha * r / (1.0 - alpha) < tol,
            _ => r < tol,
        }
}

/// Fills the ground-truth fields of a record.
pub(crate) fn annotate(record: &mut TraceRecord, config: &SolverConfig, started: Instant) {
    record.elapsed = started.elapsed().as_secs_f64();
    let Some(gt) = &config.ground_truth else { return };
    record.dist_j = Some(record.j.dist(&gt.jstar));
    let mut above = gt.jstar.le(&record.j, config.order_slack);
    if let (Some(q), Some(qs)) = (&record.q, &gt.qstar) {
        record.dist_q = Some(q.dist(qs));
        above &= qs.le(q, config.order_slack);
    }
    record.above_optimal = Some(above);
}
