use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::model::{Regime, TotalCostModel};
use crate::operators::{bellman_t_mu, greedy_select, h_backup, m_minimize, TieBreak};
use crate::policy::Policy;
use crate::vectors::{QVector, ValueVector};

/// Greedy policy `ν_k` for `Q_k` (regime D). When `start` gives the
/// iteration count `k` and `Δ = ‖(J_0, Q_0) − (J*, Q*)‖∞`, also returns
/// the a-priori bound `‖J_{ν_k} − J*‖∞ ≤ (2α^kΔ + ε)/(1 − α)`.
pub fn extract_policy_discounted(
    model: &TotalCostModel,
    q_k: &QVector,
    epsilon: f64,
    start: Option<(usize, f64)>,
) -> Result<(Policy, Option<f64>)> {
    if model.regime() != Regime::Discounted {
        return Err(Error::InvalidArgument("policy extraction with an a-priori bound needs regime D".into()));
    }
    let nu = greedy_select(model, q_k, epsilon, TieBreak::LowestIndex)?;
    let alpha = model.discount();
    let bound = start.map(|(k, delta)| (2.0 * alpha.powi(k as i32) * delta + epsilon) / (1.0 - alpha));
    Ok((nu, bound))
}

/// Stage policies `μ_1, …, μ_n` with `(T_{μ_1} ∘ ⋯ ∘ T_{μ_n})(J) ≤ J + δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NStagePolicy {
    /// `stages[0]` is applied first in time (`μ_1`).
    pub stages: Vec<Policy>,
    /// `(T_{μ_1} ∘ ⋯ ∘ T_{μ_n})(J) − J`.
    pub slack: Vec<f64>,
}

impl NStagePolicy {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }
}

/// Finds the least `n ≤ n_max` with `T^n(J) ≤ J + δ/2` and the greedy
/// stage policies attaining `T^n(J)` (regime P, finite `J`).
pub fn build_n_stage_policy(model: &TotalCostModel, j: &ValueVector, delta: f64, n_max: usize) -> Result<NStagePolicy> {
    if model.regime() != Regime::Positive {
        return Err(Error::InvalidArgument("the n-stage construction is for regime P".into()));
    }
    model.require_atomic("build_n_stage_policy")?;
    crate::error::check_len(model.num_states(), j.len())?;
    if let Some(x) = (0..j.len()).find(|&x| !j[x].is_finite()) {
        return Err(Error::InvalidArgument(format!("J must be finite (state {x})")));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("δ must be positive, got {delta}")));
    }

    // iterates[i] = T^i(J); greedy[i] attains T on iterates[i].
    let mut iterates = vec![j.clone()];
    let mut greedy = Vec::new();
    let mut best = f64::INFINITY;
    for _ in 1..=n_max {
        let prev = iterates.last().unwrap();
        let q = h_backup(model, prev)?;
        greedy.push(greedy_select(model, &q, 0.0, TieBreak::LowestIndex)?);
        let next = m_minimize(model, &q)?;
        let excess = (0..j.len()).map(|x| next[x].value() - j[x].value() - delta / 2.0).fold(f64::NEG_INFINITY, f64::max);
        best = best.min(excess);
        iterates.push(next);
        if excess <= 0.0 {
            // T_{μ_n} acts first on J, so μ_n is greedy for T^0(J).
            let stages: Vec<Policy> = greedy.into_iter().rev().collect();
            let mut composed = j.clone();
            for p in stages.iter().rev() {
                composed = bellman_t_mu(model, p, &composed)?;
            }
            let slack = (0..j.len()).map(|x| (composed[x] - j[x]).value()).collect();
            debug_assert!(composed.iter().zip(j.iter()).all(|(a, b)| *a <= *b + ExtReal::new(delta)));
            return Ok(NStagePolicy { stages, slack });
        }
    }
    Err(Error::NoStageCount { n_max, margin: best })
}
