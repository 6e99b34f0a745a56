use std::time::Instant;

use crate::error::{BoundSide, Error, Result};
use crate::ftheta::{f_theta_power, masked_update, q_fixed_point, Theta};
use crate::model::{Regime, TotalCostModel};
use crate::operators::{bellman_t, greedy_select, h_backup, m_minimize, TieBreak};
use crate::policy::Policy;
use crate::vectors::{joint_dist, QVector, StateSet, ValueVector};

use super::{annotate, residual_done, IterationTrace, SolverConfig, TraceRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct MixedOutcome {
    /// `J_0, J_1, …`.
    pub js: Vec<ValueVector>,
    /// `Q_0, Q_1, …`.
    pub qs: Vec<QVector>,
    /// `μ_0, μ_1, …`, one per completed iteration.
    pub policies: Vec<Policy>,
    pub bs: Vec<StateSet>,
    pub trace: IterationTrace,
}

/// Mixed value and policy iteration on `(J, Q)`.
///
/// Iteration `k` picks `μ_k` greedy for `Q_k` (or the injected initial
/// policy at `k = 0`), picks `B_k` by the configured strategy, sets
/// `Q_{k+1}` to `F_θ^{n_k}(Q_k; J_k)` or to `Q_{θ_k, J_k}`, and
/// `J_{k+1} = max{J̲, min{J̄, M(Q_{k+1})}}`. With masks configured each
/// iteration updates only the masked pairs and states.
pub fn mixed_vpi(model: &TotalCostModel, config: &SolverConfig) -> Result<MixedOutcome> {
    model.require_atomic("mixed_vpi")?;
    config.validate(model)?;
    let regime = model.regime();
    let alpha = model.discount();
    let started = Instant::now();
    let np = model.num_pairs() as u64;

    let j0 = config.initial_j(model);
    let q0 = match &config.q0 {
        Some(q) => q.clone(),
        None => h_backup(model, &j0)?,
    };
    if regime != Regime::Discounted && !(j0.conforms(regime) && q0.conforms(regime)) {
        return Err(Error::InvalidArgument(format!("(J0, Q0) does not conform to regime {regime}")));
    }

    let mut trace = IterationTrace::new("mixed", regime, j0.clone(), Some(q0.clone()));
    let mut js = vec![j0.clone()];
    let mut qs = vec![q0];
    let mut policies = Vec::new();
    let mut bs = Vec::new();
    let mut tk = j0;
    let sweep = config.masks.as_ref().map(|m| m.sweep_len(model));
    let mut window: Vec<f64> = Vec::new();
    let mut residual = f64::INFINITY;

    for k in 0..config.iteration_cap() {
        let (j, q) = (js.last().unwrap(), qs.last().unwrap());
        let mu = match (&config.initial_policy, k) {
            (Some(p), 0) => p.clone(),
            _ => greedy_select(model, q, config.epsilon, TieBreak::LowestIndex)?,
        };
        let b = config.b_strategy.select(model, &mu, k)?;
        let theta = Theta::new(config.b_strategy.adjust_policy(mu, &b), b);

        let (next_q, unclamped) = match &config.masks {
            Some(masks) => {
                let (g, s) = masks.masks(model, k);
                let n = config.n_schedule.at(k).unwrap_or(1);
                trace.counters.add(n as u64, np);
                masked_update(model, &theta, q, j, &g, &s, n)?
            }
            None => {
                let nq = match config.n_schedule.at(k) {
                    Some(n) => {
                        trace.counters.add(n as u64, np);
                        f_theta_power(model, &theta, q, j, n)?
                    }
                    None => {
                        let (nq, cert) = q_fixed_point(model, &theta, j, &config.inner)?;
                        trace.counters.add(cert.iterations as u64, np);
                        nq
                    }
                };
                let m = m_minimize(model, &nq)?;
                (nq, m)
            }
        };
        let next_j = config.clamp(unclamped.clone());
        residual = joint_dist(&next_j, &next_q, j, q);

        let mut rec = TraceRecord::new(k + 1, residual, next_j.clone());
        rec.policy = theta.policy.describe();
        rec.b = theta.b.describe();
        rec.q = Some(next_q.clone());
        rec.improved = Some(unclamped);
        if config.track_bounds {
            tk = bellman_t(model, &tk)?;
            trace.counters.add(1, np);
            rec.below_value_iterate = Some(next_j.le(&tk, config.order_slack));
        }
        annotate(&mut rec, config, started);
        trace.push(rec)?;
        policies.push(theta.policy);
        bs.push(theta.b);
        js.push(next_j);
        qs.push(next_q);

        let done = match sweep {
            Some(len) => {
                window.push(residual);
                if window.len() > len {
                    window.remove(0);
                }
                let worst = window.iter().copied().fold(0.0, f64::max);
                window.len() == len && residual_done(regime, alpha, worst, config.tol)
            }
            None => residual_done(regime, alpha, residual, config.tol),
        };
        if config.should_stop(k + 1, done) {
            return Ok(MixedOutcome { js, qs, policies, bs, trace });
        }
    }
    Err(Error::IterationCap {
        iterations: config.max_iter,
        residual,
        bound: match regime {
            Regime::Discounted => BoundSide::TwoSided,
            _ => BoundSide::Upper,
        },
        last: js.pop().unwrap().into_inner(),
    })
}
