//! The parametrized Q-factor mappings `F_θ` and `F_θ̂` with `θ = (μ, B)`.
//!
//! Off `B` a successor contributes its stopping cost `J(x')`; on `B` it
//! contributes `Σ_{u'} μ(u'|x') min{J(x'), Q(x', u')}`. On finite spaces
//! every pair `(μ, B)` is admissible, so [`Theta`] accepts any policy and
//! subset.

use crate::chain::{ActionGraph, GraphAction};
use crate::error::{check_len, BoundSide, Error, Result};
use crate::ext_real::ExtReal;
use crate::model::{Regime, TotalCostModel};
use crate::operators::m_minimize;
use crate::policy::Policy;
use crate::vectors::{QVector, StateSet, ValueVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    pub policy: Policy,
    pub b: StateSet,
}

impl Theta {
    pub fn new(policy: Policy, b: StateSet) -> Self {
        Theta { policy, b }
    }

    fn check(&self, model: &TotalCostModel) -> Result<()> {
        model.require_atomic("F_θ")?;
        self.policy.validate(model)?;
        if !self.policy.is_atomic() {
            return Err(Error::InvalidPolicy("θ needs a distribution over atomic controls at every state".into()));
        }
        check_len(model.num_states(), self.b.universe())
    }
}

/// `θ̂ = (μ, R)` with `R` a subset of the model's atomic pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaHat {
    pub policy: Policy,
    /// Membership mask over pair indices.
    pub r: Vec<bool>,
}

impl ThetaHat {
    pub fn new(policy: Policy, r: Vec<bool>) -> Self {
        ThetaHat { policy, r }
    }

    /// `B = proj_S(R)`.
    pub fn b(&self, model: &TotalCostModel) -> StateSet {
        StateSet((0..model.num_states()).map(|x| model.pair_range(x).any(|i| self.r[i])).collect())
    }
}

/// Applies `g + α Σ q(x'|x,u) v(x')` at every pair.
fn backup_pairs(model: &TotalCostModel, v: &[ExtReal]) -> QVector {
    let alpha = ExtReal::new(model.discount());
    QVector(
        model
            .pairs()
            .iter()
            .map(|&(x, u)| {
                let c = &model.controls(x)[u];
                let cont: ExtReal = c.transitions.iter().map(|&(y, p)| ExtReal::new(p) * v[y]).sum();
                c.cost + alpha * cont
            })
            .collect(),
    )
}

/// Per-state continuation values `v(x')` seen by `F_θ`.
fn continuation(model: &TotalCostModel, theta: &Theta, q: &QVector, j: &ValueVector) -> Vec<ExtReal> {
    (0..model.num_states())
        .map(|y| {
            if !theta.b.contains(y) {
                return j[y];
            }
            let base = model.pair_range(y).start;
            theta
                .policy
                .support(y)
                .into_iter()
                .map(|(u, w)| ExtReal::new(w) * j[y].min(q[base + u]))
                .sum()
        })
        .collect()
}

/// `F_θ(Q; J)`.
pub fn f_theta_apply(model: &TotalCostModel, theta: &Theta, q: &QVector, j: &ValueVector) -> Result<QVector> {
    theta.check(model)?;
    check_len(model.num_pairs(), q.len())?;
    check_len(model.num_states(), j.len())?;
    Ok(backup_pairs(model, &continuation(model, theta, q, j)))
}

/// `F_θ̂(Q; J)`: on `B = proj_S(R)`, controls outside the section `R_{x'}`
/// contribute `J(x')` and those inside contribute `min{J(x'), Q(x', u')}`.
pub fn f_theta_hat_apply(model: &TotalCostModel, theta_hat: &ThetaHat, q: &QVector, j: &ValueVector) -> Result<QVector> {
    model.require_atomic("F_θ̂")?;
    theta_hat.policy.validate(model)?;
    check_len(model.num_pairs(), theta_hat.r.len())?;
    check_len(model.num_pairs(), q.len())?;
    check_len(model.num_states(), j.len())?;
    let b = theta_hat.b(model);
    let v: Vec<ExtReal> = (0..model.num_states())
        .map(|y| {
            if !b.contains(y) {
                return j[y];
            }
            let base = model.pair_range(y).start;
            let support = theta_hat.policy.support(y);
            let outside: f64 = support.iter().filter(|(u, _)| !theta_hat.r[base + u]).map(|(_, w)| w).sum();
            let inside: ExtReal = support
                .iter()
                .filter(|(u, _)| theta_hat.r[base + u])
                .map(|&(u, w)| ExtReal::new(w) * j[y].min(q[base + u]))
                .sum();
            ExtReal::new(outside) * j[y] + inside
        })
        .collect();
    Ok(backup_pairs(model, &v))
}

/// `F_θ^n(Q; J)`.
pub fn f_theta_power(model: &TotalCostModel, theta: &Theta, q0: &QVector, j: &ValueVector, n: usize) -> Result<QVector> {
    if n == 0 {
        return Err(Error::InvalidArgument("F_θ power needs n ≥ 1".into()));
    }
    let mut q = f_theta_apply(model, theta, q0, j)?;
    for _ in 1..n {
        q = backup_pairs(model, &continuation(model, theta, &q, j));
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions { tol: 1e-10, max_iter: 1_000_000 }
    }
}

/// How a fixed-point iterate relates to the true `Q_{θ,J}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointCertificate {
    pub iterations: usize,
    /// Last sup-norm change between consecutive iterates.
    pub residual: f64,
    pub tolerance: f64,
    /// Regime D: two-sided; N: the iterate is an upper bound; P: a lower bound.
    pub bound: BoundSide,
    /// A-posteriori sup-norm error bound (regime D only).
    pub error_bound: Option<f64>,
    /// Whether the iteration reached an exact fixed point.
    pub stabilized: bool,
}

pub(crate) fn monotone_side(regime: Regime) -> BoundSide {
    match regime {
        Regime::Discounted => BoundSide::TwoSided,
        Regime::Negative => BoundSide::Upper,
        Regime::Positive => BoundSide::Lower,
    }
}

/// Pairs where `Q_{θ,J}` is infinite, read off the qualitative structure
/// of the associated stopping problem.
fn divergent_pairs(model: &TotalCostModel, theta: &Theta, j: &ValueVector) -> Vec<bool> {
    let regime = model.regime();
    let np = model.num_pairs();
    let n = model.num_states();
    if regime == Regime::Discounted {
        return vec![false; np];
    }
    // Nodes: decision node per pair, exit node per state, terminal node.
    let exit = |x: usize| np + x;
    let terminal = np + n;
    let succ_of = |p: usize| -> Vec<usize> {
        let (x, u) = model.pairs()[p];
        let mut s = Vec::new();
        for &(y, pr) in &model.controls(x)[u].transitions {
            if pr <= 0.0 {
                continue;
            }
            if theta.b.contains(y) {
                let base = model.pair_range(y).start;
                s.extend(theta.policy.support(y).into_iter().map(|(v, _)| base + v));
            } else {
                s.push(exit(y));
            }
        }
        s
    };
    let mut actions = Vec::with_capacity(np + n + 1);
    for p in 0..np {
        let (x, u) = model.pairs()[p];
        actions.push(vec![
            GraphAction { cost: model.controls(x)[u].cost, succ: succ_of(p) },
            GraphAction { cost: j[x], succ: vec![terminal] },
        ]);
    }
    for x in 0..n {
        actions.push(vec![GraphAction { cost: j[x], succ: vec![terminal] }]);
    }
    actions.push(vec![GraphAction { cost: ExtReal::ZERO, succ: vec![terminal] }]);
    let graph = ActionGraph { actions };
    let div = graph.divergent(regime);
    let inf = regime.divergent_value().unwrap_or(ExtReal::ZERO);
    (0..np)
        .map(|p| {
            let (x, u) = model.pairs()[p];
            model.controls(x)[u].cost == inf || succ_of(p).iter().any(|&s| div[s])
        })
        .collect()
}

/// `Q_{θ,J}`: the fixed point of `F_θ(·; J)` (regime D) or the monotone
/// limit of `F_θ^k(0; J)` (regimes N and P).
pub fn q_fixed_point(
    model: &TotalCostModel,
    theta: &Theta,
    j: &ValueVector,
    options: &FixedPointOptions,
) -> Result<(QVector, FixedPointCertificate)> {
    theta.check(model)?;
    check_len(model.num_states(), j.len())?;
    let regime = model.regime();
    let alpha = model.discount();
    let pins = divergent_pairs(model, theta, j);
    let inf = regime.divergent_value().unwrap_or(ExtReal::ZERO);
    let pin = |q: QVector| QVector(q.0.into_iter().zip(&pins).map(|(v, &p)| if p { inf } else { v }).collect());
    let mut q = pin(QVector::zeros(model.num_pairs()));
    let mut residual = f64::INFINITY;
    for k in 1..=options.max_iter {
        let next = pin(backup_pairs(model, &continuation(model, theta, &q, j)));
        residual = next.dist(&q);
        q = next;
        let stabilized = residual == 0.0;
        let error_bound = (regime == Regime::Discounted).then(|| alpha * residual / (1.0 - alpha));
        let done = stabilized || error_bound.map_or(residual < options.tol, |e| e < options.tol);
        if done {
            return Ok((
                q,
                FixedPointCertificate {
                    iterations: k,
                    residual,
                    tolerance: options.tol,
                    bound: monotone_side(regime),
                    error_bound,
                    stabilized,
                },
            ));
        }
    }
    Err(Error::IterationCap { iterations: options.max_iter, residual, bound: monotone_side(regime), last: q.into_inner() })
}

/// One asynchronous step: `F_θ^n(Q; J)` on `gamma_mask`, then `M` of the
/// new `Q` on `s_mask`; entries outside the masks keep their old values.
pub fn masked_update(
    model: &TotalCostModel,
    theta: &Theta,
    q: &QVector,
    j: &ValueVector,
    gamma_mask: &[bool],
    s_mask: &[bool],
    n: usize,
) -> Result<(QVector, ValueVector)> {
    check_len(model.num_pairs(), gamma_mask.len())?;
    check_len(model.num_states(), s_mask.len())?;
    let fq = f_theta_power(model, theta, q, j, n)?;
    let new_q = QVector((0..q.len()).map(|i| if gamma_mask[i] { fq[i] } else { q[i] }).collect());
    let mq = m_minimize(model, &new_q)?;
    let new_j = ValueVector((0..j.len()).map(|x| if s_mask[x] { mq[x] } else { j[x] }).collect());
    Ok((new_q, new_j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fixtures::fixture;
    use crate::operators::{bellman_t, h_backup};

    #[test]
    fn empty_b_is_h_backup() {
        let fx = fixture("FX-D").unwrap();
        let m = &fx.model;
        let theta = Theta::new(Policy::uniform(m), StateSet::empty(m.num_states()));
        let q = QVector::from_f64(&vec![5.0; m.num_pairs()]);
        let j = ValueVector::from_f64(&[1.0, -2.0, 0.5]);
        assert_eq!(f_theta_apply(m, &theta, &q, &j).unwrap(), h_backup(m, &j).unwrap());
    }

    #[test]
    fn footnote9_fixed_point_identity() {
        let fx = fixture("FX-P2").unwrap();
        let m = &fx.model;
        let theta = Theta::new(Policy::deterministic(m, &[0, 1]), StateSet::full(2));
        let qstar = fx.qstar.clone().unwrap();
        assert_eq!(f_theta_apply(m, &theta, &qstar, &fx.jstar).unwrap(), qstar);
        let (q, cert) = q_fixed_point(m, &theta, &fx.jstar, &FixedPointOptions::default()).unwrap();
        assert_eq!(q, qstar);
        assert_eq!(cert.bound, BoundSide::Lower);
    }

    #[test]
    fn theta_hat_examples() {
        let fx = fixture("FX-P2").unwrap();
        let m = &fx.model;
        let qstar = fx.qstar.clone().unwrap();
        let stay = Policy::deterministic(m, &[0, 0]);
        let th = ThetaHat::new(stay.clone(), vec![false, true, false]);
        assert_eq!(f_theta_hat_apply(m, &th, &qstar, &fx.jstar).unwrap(), qstar);

        let full = ThetaHat::new(stay.clone(), vec![false, true, true]);
        let theta = Theta::new(stay.clone(), StateSet::from_indices(2, &[1]));
        let q = QVector::from_f64(&[0.5, 0.25, 3.0]);
        let j = ValueVector::from_f64(&[1.0, 2.0]);
        assert_eq!(f_theta_hat_apply(m, &full, &q, &j).unwrap(), f_theta_apply(m, &theta, &q, &j).unwrap());

        let empty = ThetaHat::new(stay, vec![false; 3]);
        assert_eq!(f_theta_hat_apply(m, &empty, &q, &j).unwrap(), h_backup(m, &j).unwrap());
    }

    #[test]
    fn all_infinite_j_gives_policy_backup() {
        let fx = fixture("FX-D").unwrap();
        let m = &fx.model;
        let mu = Policy::deterministic(m, &[1, 0, 1]);
        let theta = Theta::new(mu, StateSet::full(m.num_states()));
        let q = QVector::from_f64(&(0..m.num_pairs()).map(|i| i as f64 * 0.7 - 1.0).collect::<Vec<_>>());
        let j = ValueVector::constant(m.num_states(), ExtReal::INFINITY);
        let out = f_theta_apply(m, &theta, &q, &j).unwrap();
        for (i, &(x, u)) in m.pairs().iter().enumerate() {
            let c = &m.controls(x)[u];
            let expect: ExtReal = c.cost
                + ExtReal::new(m.discount())
                    * c.transitions
                        .iter()
                        .map(|&(y, p)| {
                            let mu_y = [1usize, 0, 1][y];
                            ExtReal::new(p) * q[m.pair_index(y, mu_y)]
                        })
                        .sum::<ExtReal>();
            assert_eq!(out[i], expect);
        }
    }

    #[test]
    fn power_one_is_apply() {
        let fx = fixture("FX-D").unwrap();
        let m = &fx.model;
        let theta = Theta::new(Policy::uniform(m), StateSet::from_indices(3, &[0, 2]));
        let q = QVector::zeros(m.num_pairs());
        let j = ValueVector::from_f64(&[1.0, 2.0, 3.0]);
        assert_eq!(f_theta_power(m, &theta, &q, &j, 1).unwrap(), f_theta_apply(m, &theta, &q, &j).unwrap());
        assert!(f_theta_power(m, &theta, &q, &j, 0).is_err());
    }

    #[test]
    fn masks() {
        let fx = fixture("FX-D").unwrap();
        let m = &fx.model;
        let theta = Theta::new(Policy::uniform(m), StateSet::full(3));
        let q = QVector::zeros(m.num_pairs());
        let j = ValueVector::zeros(3);
        let (q1, j1) = masked_update(m, &theta, &q, &j, &vec![false; m.num_pairs()], &[false; 3], 2).unwrap();
        assert_eq!((q1, j1), (q.clone(), j.clone()));
        let (q2, j2) = masked_update(m, &theta, &q, &j, &vec![true; m.num_pairs()], &[true; 3], 1).unwrap();
        let expect = f_theta_apply(m, &theta, &q, &j).unwrap();
        assert_eq!(j2, m_minimize(m, &expect).unwrap());
        assert_eq!(q2, expect);
    }

    #[test]
    fn divergent_pairs_are_pinned() {
        let fx = fixture("FX-P2").unwrap();
        let m = &fx.model;
        let theta = Theta::new(Policy::deterministic(m, &[0, 0]), StateSet::from_indices(2, &[0]));
        let j = ValueVector(vec![ExtReal::ZERO, ExtReal::INFINITY]);
        let (q, cert) = q_fixed_point(m, &theta, &j, &FixedPointOptions::default()).unwrap();
        assert_eq!(q, QVector(vec![ExtReal::ZERO, ExtReal::INFINITY, ExtReal::ONE]));
        assert!(cert.stabilized);
        let tj = bellman_t(m, &j).unwrap();
        assert!(m_minimize(m, &q).unwrap().le(&tj, 0.0));
    }
}
