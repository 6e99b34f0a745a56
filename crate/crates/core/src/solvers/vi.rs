use std::time::Instant;

use crate::chain::divergent_states;
use crate::error::{check_len, BoundSide, Error, Result};
use crate::ext_real::sup_dist;
use crate::model::Regime;
use crate::model::TotalCostModel;
use crate::operators::bellman_t;
use crate::vectors::ValueVector;

use super::{annotate, residual_done, Check, IterationTrace, SolverConfig, TraceRecord};

pub const NOTE_NONDECREASING: &str = "monotone_nondecreasing";
pub const NOTE_NONINCREASING: &str = "monotone_nonincreasing";

/// `J_{k+1} = T(J_k)` from `j0`.
///
/// Records hold the raw iterates `T^k(J_0)`. States whose optimal cost is
/// infinite are left out of the residual, and the returned limit carries
/// the infinite value there.
pub fn value_iteration(model: &TotalCostModel, j0: &ValueVector, config: &SolverConfig) -> Result<(ValueVector, IterationTrace)> {
    check_len(model.num_states(), j0.len())?;
    let regime = model.regime();
    let conforming = match regime {
        Regime::Discounted => j0.iter().all(|v| v.is_finite()),
        _ => j0.conforms(regime),
    };
    if !conforming {
        return Err(Error::InvalidArgument(format!("J0 does not conform to regime {regime}")));
    }
    let started = Instant::now();
    let div = divergent_states(model);
    let inf = regime.divergent_value();
    let live: Vec<usize> = (0..model.num_states()).filter(|&x| !div.contains(x)).collect();
    let pinned = |j: &ValueVector| match inf {
        Some(v) => ValueVector((0..j.len()).map(|x| if div.contains(x) { v } else { j[x] }).collect()),
        None => j.clone(),
    };

    let mut trace = IterationTrace::new("vi", regime, j0.clone(), None);
    let mut j = j0.clone();
    let mut up = true;
    let mut down = true;
    let mut residual = f64::INFINITY;
    for k in 1..=config.iteration_cap() {
        let next = bellman_t(model, &j)?;
        trace.counters.add(1, model.num_pairs() as u64);
        up &= j.le(&next, 0.0);
        down &= next.le(&j, 0.0);
        let a: Vec<_> = live.iter().map(|&x| j[x]).collect();
        let b: Vec<_> = live.iter().map(|&x| next[x]).collect();
        residual = sup_dist(&a, &b);
        j = next;
        let mut rec = TraceRecord::new(k, residual, j.clone());
        annotate(&mut rec, config, started);
        trace.push(rec)?;
        if config.should_stop(k, residual_done(regime, model.discount(), residual, config.tol)) {
            finish(&mut trace, up, down);
            return Ok((pinned(&j), trace));
        }
    }
    finish(&mut trace, up, down);
    Err(Error::IterationCap {
        iterations: config.max_iter,
        residual,
        bound: match (up, down) {
            (true, false) => BoundSide::Lower,
            (false, true) => BoundSide::Upper,
            _ => BoundSide::TwoSided,
        },
        last: pinned(&j).into_inner(),
    })
}

fn finish(trace: &mut IterationTrace, up: bool, down: bool) {
    trace.notes.push(Check::new(NOTE_NONDECREASING, up));
    trace.notes.push(Check::new(NOTE_NONINCREASING, down));
    trace.bound = match (up, down) {
        (true, false) => Some(BoundSide::Lower),
        (false, true) => Some(BoundSide::Upper),
        _ => None,
    };
}
