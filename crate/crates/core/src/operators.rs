//! Bellman operators `T`, `T_μ`, the Q-backup `H` and the minimization `M`.

use crate::error::{check_len, Error, Result};
use crate::ext_real::ExtReal;
use crate::model::{AffineFamily, Interval, TotalCostModel};
use crate::policy::{Action, Policy};
use crate::vectors::{QVector, ValueVector};

/// `Σ_y p(y)·J(y)` under the extended-real conventions.
pub fn expectation(transitions: &[(usize, f64)], j: &[ExtReal]) -> ExtReal {
    transitions.iter().map(|&(y, p)| ExtReal::new(p) * j[y]).sum()
}

/// Result of minimizing `t ↦ a + b·t` over an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineInfimum {
    pub value: ExtReal,
    pub attained: bool,
    /// Minimizer when attained, otherwise the limit point approached;
    /// `None` when no single point is meaningful.
    pub argument: Option<f64>,
}

/// Infimum of `t ↦ a + b·t` over `interval` with extended-real `a`, `b`.
///
/// With `b = ±∞` the map is `±∞` at every `t > 0` and `a` at `t = 0`.
pub fn affine_infimum(a: ExtReal, b: ExtReal, interval: &Interval) -> Result<AffineInfimum> {
    if (a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf()) {
        return Err(Error::OppositeInfinities { a, b });
    }
    let Interval { lo, hi, lo_closed, hi_closed } = *interval;
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
    }
    let mid = 0.5 * (lo + hi);
    if a.is_pos_inf() {
        return Ok(AffineInfimum { value: a, attained: true, argument: Some(mid) });
    }
    if a.is_neg_inf() {
        return Ok(AffineInfimum { value: a, attained: true, argument: Some(mid) });
    }
    if b.is_pos_inf() {
        return Ok(if lo == 0.0 && lo_closed {
            AffineInfimum { value: a, attained: true, argument: Some(0.0) }
        } else {
            AffineInfimum { value: ExtReal::INFINITY, attained: false, argument: None }
        });
    }
    if b.is_neg_inf() {
        let arg = if hi_closed { hi } else { mid };
        return Ok(AffineInfimum { value: ExtReal::NEG_INFINITY, attained: true, argument: Some(arg) });
    }
    let (a, b) = (a.value(), b.value());
    Ok(if b == 0.0 {
        AffineInfimum { value: ExtReal::new(a), attained: true, argument: Some(if lo_closed { lo } else { mid }) }
    } else if b > 0.0 {
        AffineInfimum { value: ExtReal::new(a + b * lo), attained: lo_closed, argument: Some(lo) }
    } else {
        AffineInfimum { value: ExtReal::new(a + b * hi), attained: hi_closed, argument: Some(hi) }
    })
}

/// Pointwise one-stage-plus-continuation value of a family at parameter `t`.
pub fn family_value_at(alpha: f64, family: &AffineFamily, t: f64, j: &[ExtReal]) -> ExtReal {
    let cont: ExtReal = family.transitions.iter().map(|tr| ExtReal::new(tr.prob_at(t)) * j[tr.state]).sum();
    ExtReal::new(family.cost_at(t)) + ExtReal::new(alpha) * cont
}

/// Infimum over a family's parameter interval of the Bellman right-hand side.
pub fn family_infimum(alpha: f64, family: &AffineFamily, j: &[ExtReal]) -> Result<AffineInfimum> {
    let alpha_e = ExtReal::new(alpha);
    // Successors whose probability is positive somewhere inside the interval
    // and whose value is infinite make the coefficient shortcut unsound.
    let interior_inf = family
        .transitions
        .iter()
        .filter(|tr| (tr.p0 != 0.0 || tr.p1 != 0.0) && !j[tr.state].is_finite())
        .map(|tr| j[tr.state])
        .fold(None, |acc: Option<ExtReal>, v| Some(acc.map_or(v, |a| a + v)));

    match interior_inf {
        None => {
            let mut a = ExtReal::new(family.cost[0]);
            let mut b = ExtReal::new(family.cost[1]);
            let mut sa = ExtReal::ZERO;
            let mut sb = ExtReal::ZERO;
            for tr in &family.transitions {
                let v = j[tr.state];
                if v.is_finite() {
                    sa += ExtReal::new(tr.p0) * v;
                    sb += ExtReal::new(tr.p1) * v;
                }
            }
            a += alpha_e * sa;
            b += alpha_e * sb;
            affine_infimum(a, b, &family.interval)
        }
        Some(inner) => {
            // Every interior parameter puts positive mass on an infinite
            // successor; the interior value is that infinity scaled by α.
            let interior = alpha_e * inner;
            let mut best = AffineInfimum { value: interior, attained: interior.is_neg_inf(), argument: None };
            for t in family.interval.closed_endpoints() {
                let v = family_value_at(alpha, family, t, j);
                if v < best.value {
                    best = AffineInfimum { value: v, attained: true, argument: Some(t) };
                }
            }
            Ok(best)
        }
    }
}

/// Value of applying atomic control `u` at `x`: `g(x,u) + α·E[J(x')]`.
pub fn control_value(model: &TotalCostModel, x: usize, u: usize, j: &[ExtReal]) -> ExtReal {
    let c = &model.controls(x)[u];
    c.cost + ExtReal::new(model.discount()) * expectation(&c.transitions, j)
}

/// The optimal cost operator `T`.
pub fn bellman_t(model: &TotalCostModel, j: &ValueVector) -> Result<ValueVector> {
    check_len(model.num_states(), j.len())?;
    let alpha = model.discount();
    let mut out = Vec::with_capacity(model.num_states());
    for x in 0..model.num_states() {
        let mut best = ExtReal::INFINITY;
        for u in 0..model.controls(x).len() {
            best = best.min(control_value(model, x, u, j));
        }
        for fam in model.families(x) {
            best = best.min(family_infimum(alpha, fam, j)?.value);
        }
        out.push(best);
    }
    Ok(ValueVector(out))
}

/// The policy operator `T_μ`.
pub fn bellman_t_mu(model: &TotalCostModel, policy: &Policy, j: &ValueVector) -> Result<ValueVector> {
    check_len(model.num_states(), j.len())?;
    check_len(model.num_states(), policy.len())?;
    let alpha = model.discount();
    let out = (0..model.num_states())
        .map(|x| match policy.action(x) {
            Action::Mixed(_) => policy
                .support(x)
                .into_iter()
                .map(|(u, w)| ExtReal::new(w) * control_value(model, x, u, j))
                .sum(),
            Action::Affine { family, t } => family_value_at(alpha, &model.families(x)[*family], *t, j),
        })
        .collect();
    Ok(ValueVector(out))
}

/// `H(x, u, J) = g(x,u) + α·E[J(x')]` over all atomic pairs.
pub fn h_backup(model: &TotalCostModel, j: &ValueVector) -> Result<QVector> {
    check_len(model.num_states(), j.len())?;
    Ok(QVector(model.pairs().iter().map(|&(x, u)| control_value(model, x, u, j)).collect()))
}

/// `M(Q)(x) = min_u Q(x, u)`.
pub fn m_minimize(model: &TotalCostModel, q: &QVector) -> Result<ValueVector> {
    model.require_atomic("m_minimize")?;
    check_len(model.num_pairs(), q.len())?;
    Ok(ValueVector(
        (0..model.num_states())
            .map(|x| q[model.pair_range(x)].iter().copied().fold(ExtReal::INFINITY, ExtReal::min))
            .collect(),
    ))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TieBreak {
    #[default]
    LowestIndex,
    HighestIndex,
}

/// Nonrandomized policy with `Q(x, μ(x)) ≤ M(Q)(x) + ε` at every state.
pub fn greedy_select(model: &TotalCostModel, q: &QVector, epsilon: f64, tie_break: TieBreak) -> Result<Policy> {
    Ok(Policy::deterministic(model, &greedy_choices(model, q, epsilon, tie_break)?))
}

/// Control indices chosen by [`greedy_select`].
pub fn greedy_choices(model: &TotalCostModel, q: &QVector, epsilon: f64, tie_break: TieBreak) -> Result<Vec<usize>> {
    if epsilon < 0.0 {
        return Err(Error::InvalidArgument(format!("negative epsilon {epsilon}")));
    }
    let m = m_minimize(model, q)?;
    let slack = ExtReal::new(epsilon);
    (0..model.num_states())
        .map(|x| {
            let r = model.pair_range(x);
            let ok = |u: &usize| q[r.start + *u] <= m[x] + slack;
            let n = r.len();
            let pick = match tie_break {
                TieBreak::LowestIndex => (0..n).find(ok),
                TieBreak::HighestIndex => (0..n).rev().find(ok),
            };
            pick.ok_or_else(|| Error::InvalidArgument(format!("state {x} has no atomic control")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fixtures::fixture;

    fn e(v: f64) -> ExtReal {
        ExtReal::new(v)
    }

    #[test]
    fn affine_infimum_examples() {
        let open = Interval::open(0.0, 1.0);
        let r = affine_infimum(e(0.5), e(2.0), &open).unwrap();
        assert_eq!((r.value, r.attained, r.argument), (e(0.5), false, Some(0.0)));
        let r = affine_infimum(e(0.0), ExtReal::INFINITY, &open).unwrap();
        assert_eq!((r.value, r.attained, r.argument), (ExtReal::INFINITY, false, None));
        let r = affine_infimum(e(1.0), e(-3.0), &open).unwrap();
        assert_eq!((r.value, r.attained, r.argument), (e(-2.0), false, Some(1.0)));
    }

    #[test]
    fn affine_infimum_closed_endpoints() {
        let r = affine_infimum(e(0.5), e(2.0), &Interval::closed(0.0, 1.0)).unwrap();
        assert!(r.attained);
        let r = affine_infimum(e(3.0), ExtReal::INFINITY, &Interval::closed(0.0, 1.0)).unwrap();
        assert_eq!((r.value, r.argument), (e(3.0), Some(0.0)));
        let r = affine_infimum(e(3.0), ExtReal::NEG_INFINITY, &Interval::open(0.0, 1.0)).unwrap();
        assert_eq!(r.value, ExtReal::NEG_INFINITY);
        assert!(affine_infimum(ExtReal::INFINITY, ExtReal::NEG_INFINITY, &Interval::open(0.0, 1.0)).is_err());
    }

    #[test]
    fn t_on_footnote8_model() {
        let fx = fixture("FX-N2").unwrap();
        let tj = bellman_t(&fx.model, &ValueVector::zeros(2)).unwrap();
        assert_eq!(tj, ValueVector::from_f64(&[0.0, -1.0]));
    }

    #[test]
    fn t_keeps_cor51_gap_state_at_zero() {
        let fx = fixture("FX-P3a").unwrap();
        let mut j = ValueVector::zeros(3);
        for _ in 0..20 {
            j = bellman_t(&fx.model, &j).unwrap();
            assert_eq!(j[2], ExtReal::ZERO);
        }
        let jstar = ValueVector(vec![e(0.0), ExtReal::INFINITY, e(1.0)]);
        assert_eq!(bellman_t(&fx.model, &jstar).unwrap(), jstar);
    }

    #[test]
    fn t_mu_examples() {
        let fx = fixture("FX-N2").unwrap();
        let stay = Policy::deterministic(&fx.model, &[0, 0]);
        let jstar = fx.jstar.clone();
        let a = bellman_t_mu(&fx.model, &stay, &jstar).unwrap();
        let b = bellman_t(&fx.model, &jstar).unwrap();
        assert_eq!(a[1], e(-1.0));
        assert_eq!(a, b);

        let fx = fixture("FX-P2").unwrap();
        let go = Policy::deterministic(&fx.model, &[0, 1]);
        let jmu = ValueVector::from_f64(&[0.0, 1.0]);
        assert_eq!(bellman_t_mu(&fx.model, &go, &jmu).unwrap(), jmu);
        assert_eq!(bellman_t(&fx.model, &jmu).unwrap(), jmu);
    }

    #[test]
    fn t_mu_of_zero_is_expected_cost() {
        let fx = fixture("FX-D").unwrap();
        let pol = Policy::uniform(&fx.model);
        let v = bellman_t_mu(&fx.model, &pol, &ValueVector::zeros(fx.model.num_states())).unwrap();
        for x in 0..fx.model.num_states() {
            let n = fx.model.controls(x).len() as f64;
            let expect: f64 = fx.model.controls(x).iter().map(|c| c.cost.value() / n).sum();
            assert!((v[x].value() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn h_backup_and_m() {
        let fx = fixture("FX-P2").unwrap();
        let q = h_backup(&fx.model, &fx.jstar).unwrap();
        assert_eq!(q, QVector::from_f64(&[0.0, 0.0, 1.0]));
        assert_eq!(m_minimize(&fx.model, &q).unwrap(), fx.jstar);

        let fx = fixture("FX-N2").unwrap();
        let q = h_backup(&fx.model, &ValueVector::from_f64(&[0.0, -1.0])).unwrap();
        assert_eq!(q, QVector::from_f64(&[0.0, -1.0, -1.0]));
        assert_eq!(m_minimize(&fx.model, &q).unwrap(), ValueVector::from_f64(&[0.0, -1.0]));
        let mu = greedy_choices(&fx.model, &q, 0.0, TieBreak::LowestIndex).unwrap();
        assert_eq!(mu, vec![0, 0]);
    }

    #[test]
    fn h_backup_of_zero_is_cost() {
        let fx = fixture("FX-D").unwrap();
        let q = h_backup(&fx.model, &ValueVector::zeros(fx.model.num_states())).unwrap();
        for (i, &(x, u)) in fx.model.pairs().iter().enumerate() {
            assert_eq!(q[i], fx.model.controls(x)[u].cost);
        }
    }

    #[test]
    fn greedy_examples() {
        let fx = fixture("FX-P2").unwrap();
        let q = h_backup(&fx.model, &fx.jstar).unwrap();
        assert_eq!(greedy_choices(&fx.model, &q, 0.0, TieBreak::LowestIndex).unwrap(), vec![0, 0]);
        let big = QVector::from_f64(&[3.0, 5.0, 1.0]);
        assert_eq!(greedy_choices(&fx.model, &big, 10.0, TieBreak::LowestIndex).unwrap(), vec![0, 0]);
        assert_eq!(greedy_choices(&fx.model, &big, 0.0, TieBreak::LowestIndex).unwrap(), vec![0, 1]);
    }

    #[test]
    fn m_rejects_affine_models() {
        let fx = fixture("FX-P3a").unwrap();
        assert!(matches!(
            m_minimize(&fx.model, &QVector::zeros(fx.model.num_pairs())),
            Err(Error::AffineUnsupported(_))
        ));
    }
}
