use std::time::Instant;

use crate::error::{BoundSide, Error, Result};
use crate::ext_real::ExtReal;
use crate::ftheta::Theta;
use crate::model::{Regime, TotalCostModel};
use crate::operators::{bellman_t, greedy_select, h_backup, m_minimize, TieBreak};
use crate::stopping::lp_upper_bound;
use crate::vectors::{joint_dist, QVector, ValueVector};

use super::{annotate, cone_constant, residual_done, BStrategy, Check, IterationTrace, SolverConfig, TraceRecord};

/// `Q_{k+1} ≤ F_{θ_k}(Q_{k+1}; J_k)`.
pub const CHECK_LP_UPPER: &str = "lp_below_f_theta";
/// `Q_{k+1} ≥ Q_{θ_k, J_k}`.
pub const CHECK_LP_LOWER: &str = "lp_above_q_theta";
/// `J_k ≤ c J*` with `c` taken from `J_0`.
pub const CHECK_WITHIN_CONE: &str = "within_cone";

/// Tolerance of the two LP inequality checks.
const LP_CHECK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LpVariantOutcome {
    pub trace: IterationTrace,
    pub j: ValueVector,
    pub q: QVector,
}

/// Mixed iteration for regime P in which `Q_{k+1}` is the upper bound `Q̄`
/// obtained from the finite linear program for `θ_k = (μ_k, B_k)` and
/// `J_k`, and `J_{k+1} = M(Q_{k+1})`.
pub fn lp_variant_vpi(model: &TotalCostModel, config: &SolverConfig) -> Result<LpVariantOutcome> {
    if model.regime() != Regime::Positive {
        return Err(Error::InvalidArgument("the LP variant is defined for regime P".into()));
    }
    model.require_atomic("lp_variant_vpi")?;
    config.validate(model)?;
    if matches!(config.b_strategy, BStrategy::Splice { .. }) {
        return Err(Error::InvalidArgument("the LP variant uses greedy policies; splicing is not supported".into()));
    }
    let started = Instant::now();
    let np = model.num_pairs() as u64;
    let j0 = config.initial_j(model);
    let q0 = match &config.q0 {
        Some(q) => q.clone(),
        None => h_backup(model, &j0)?,
    };
    if !(j0.conforms(Regime::Positive) && q0.conforms(Regime::Positive)) {
        return Err(Error::InvalidArgument("(J0, Q0) must be nonnegative".into()));
    }
    let cone = config.ground_truth.as_ref().map(|gt| (cone_constant(&j0, &gt.jstar), &gt.jstar));

    let mut trace = IterationTrace::new("lp", Regime::Positive, j0.clone(), Some(q0.clone()));
    trace.bound = Some(BoundSide::Upper);
    let (mut j, mut q) = (j0.clone(), q0);
    let mut tk = j0;
    let mut residual = f64::INFINITY;
    for k in 0..config.iteration_cap() {
        let mu = match (&config.initial_policy, k) {
            (Some(p), 0) => p.clone(),
            _ => greedy_select(model, &q, config.epsilon, TieBreak::LowestIndex)?,
        };
        let b = config.b_strategy.select(model, &mu, k)?;
        let theta = Theta::new(mu, b);
        let lp = lp_upper_bound(model, &theta, &j, None)?;
        trace.counters.add(lp.certificate.iterations as u64 + 2, np);
        let next_q = lp.q_bar;
        let next_j = m_minimize(model, &next_q)?;
        residual = joint_dist(&next_j, &next_q, &j, &q);

        let mut rec = TraceRecord::new(k + 1, residual, next_j.clone());
        rec.policy = theta.policy.describe();
        rec.b = theta.b.describe();
        rec.q = Some(next_q.clone());
        rec.checks.push(Check::new(CHECK_LP_UPPER, lp.certificate.upper_margin >= -LP_CHECK_TOL));
        rec.checks.push(Check::new(CHECK_LP_LOWER, lp.certificate.lower_margin >= -LP_CHECK_TOL));
        if let Some((c, jstar)) = &cone {
            let ok = match c {
                Ok(c) => (0..jstar.len()).all(|x| {
                    let bound = jstar[x].scale(*c);
                    next_j[x] <= bound + ExtReal::new(1e-12 * (1.0 + bound.value().abs()))
                }),
                Err(_) => false,
            };
            rec.checks.push(Check::new(CHECK_WITHIN_CONE, ok));
        }
        if config.track_bounds {
            tk = bellman_t(model, &tk)?;
            rec.below_value_iterate = Some(next_j.le(&tk, config.order_slack));
        }
        annotate(&mut rec, config, started);
        trace.push(rec)?;
        j = next_j;
        q = next_q;
        if config.should_stop(k + 1, residual_done(Regime::Positive, 1.0, residual, config.tol)) {
            return Ok(LpVariantOutcome { trace, j, q });
        }
    }
    Err(Error::IterationCap { iterations: config.max_iter, residual, bound: BoundSide::Upper, last: j.into_inner() })
}
