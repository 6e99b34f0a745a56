//! Cost of a stationary policy, `J_μ`.
//!
//! Under α = 1 the total cost may be infinite. States are first classified
//! on the support graph of the induced chain: a closed class carrying any
//! nonzero cost accumulates without bound, and so does every state that
//! reaches such a class (or an infinite one-stage cost) with positive
//! probability. The remaining states are solved exactly by a block
//! substitution over strongly connected components, sinks first. This
//! classifier is a construction of this crate; the total-cost framework
//! defines `J_μ` only as a limit.

use nalgebra::{DMatrix, DVector};

use crate::chain::{can_reach, induced_kernel, policy_costs, strongly_connected, Kernel};
use crate::error::{BoundSide, Error, Result};
use crate::ext_real::ExtReal;
use crate::model::{Regime, TotalCostModel};
use crate::operators::bellman_t_mu;
use crate::policy::Policy;
use crate::vectors::ValueVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMethod {
    /// Graph classification plus exact linear solves.
    #[default]
    Exact,
    /// Graph classification plus monotone iteration `T_μ^k(0)`.
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub method: EvalMethod,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { method: EvalMethod::Exact, max_iter: 100_000, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exactness {
    Exact,
    Iterative { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub j: ValueVector,
    pub exactness: Exactness,
}

/// Which states have infinite policy cost, and which form zero-cost closed
/// classes.
struct Classification {
    infinite: Vec<bool>,
    zero_closed: Vec<bool>,
    components: Vec<Vec<usize>>,
}

fn classify(kernel: &Kernel, costs: &[ExtReal], regime: Regime) -> Classification {
    let n = kernel.len();
    let succ: Vec<Vec<usize>> = kernel.iter().map(|r| r.iter().map(|&(y, _)| y).collect()).collect();
    let components = strongly_connected(&succ);
    let mut comp_of = vec![0; n];
    for (i, c) in components.iter().enumerate() {
        for &x in c {
            comp_of[x] = i;
        }
    }
    let mut bad: Vec<bool> = costs.iter().map(|c| !c.is_finite()).collect();
    let mut zero_closed = vec![false; n];
    if regime != Regime::Discounted {
        for (i, c) in components.iter().enumerate() {
            let closed = c.iter().all(|&x| succ[x].iter().all(|&y| comp_of[y] == i));
            if !closed {
                continue;
            }
            if c.iter().all(|&x| costs[x] == ExtReal::ZERO) {
                for &x in c {
                    zero_closed[x] = true;
                }
            } else {
                for &x in c {
                    bad[x] = true;
                }
            }
        }
    }
    let infinite = if regime == Regime::Discounted { bad } else { can_reach(&succ, &bad) };
    Classification { infinite, zero_closed, components }
}

/// Solves `J = c + α κ J` on the finite states, one strongly connected
/// component at a time (sinks first).
fn solve_blocks(kernel: &Kernel, costs: &[ExtReal], alpha: f64, class: &Classification, j: &mut [ExtReal]) -> Result<()> {
    let mut done: Vec<bool> = (0..kernel.len()).map(|x| class.infinite[x] || class.zero_closed[x]).collect();
    for comp in &class.components {
        if comp.iter().all(|&x| done[x]) {
            continue;
        }
        let m = comp.len();
        let local = |y: usize| comp.iter().position(|&z| z == y);
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DVector::<f64>::zeros(m);
        for (i, &x) in comp.iter().enumerate() {
            let mut outflow = 0.0;
            let mut self_p = 0.0;
            let mut known = 0.0;
            for &(y, p) in &kernel[x] {
                match local(y) {
                    Some(k) if k == i => self_p += p,
                    Some(k) => {
                        a[(i, k)] -= alpha * p;
                        outflow += p;
                    }
                    None => {
                        known += p * j[y].value();
                        outflow += p;
                    }
                }
            }
            // With α = 1 the diagonal 1 − κ(x|x) is taken as the outflow mass,
            // which avoids cancellation on exactly representable rows.
            a[(i, i)] = if alpha == 1.0 { outflow } else { 1.0 - alpha * self_p };
            rhs[i] = costs[x].value() + alpha * known;
        }
        let sol = if m == 1 {
            if a[(0, 0)] == 0.0 {
                return Err(Error::Numerical(format!("state {} has no outflow", comp[0])));
            }
            DVector::from_element(1, rhs[0] / a[(0, 0)])
        } else {
            a.lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Numerical("singular policy-evaluation block".into()))?
        };
        for (i, &x) in comp.iter().enumerate() {
            j[x] = ExtReal::new(sol[i]);
            done[x] = true;
        }
    }
    Ok(())
}

/// `J_μ` together with how it was obtained.
pub fn evaluate_policy(model: &TotalCostModel, policy: &Policy, options: &EvalOptions) -> Result<Evaluation> {
    let kernel = induced_kernel(model, policy)?;
    let costs = policy_costs(model, policy);
    let regime = model.regime();
    if regime == Regime::Discounted {
        if let Some(x) = costs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidModel(format!("infinite cost at state {x} under regime D")));
        }
    }
    let class = classify(&kernel, &costs, regime);
    let div = regime.divergent_value().unwrap_or(ExtReal::ZERO);
    let mut j: Vec<ExtReal> = (0..model.num_states())
        .map(|x| if class.infinite[x] { div } else { ExtReal::ZERO })
        .collect();

    match options.method {
        EvalMethod::Exact => {
            solve_blocks(&kernel, &costs, model.discount(), &class, &mut j)?;
            Ok(Evaluation { j: ValueVector(j), exactness: Exactness::Exact })
        }
        EvalMethod::Iterative => {
            let alpha = model.discount();
            let mut cur = ValueVector(j);
            for k in 1..=options.max_iter {
                let next = bellman_t_mu(model, policy, &cur)?;
                let next = ValueVector(
                    (0..next.len()).map(|x| if class.infinite[x] { div } else { next[x] }).collect(),
                );
                let r = next.dist(&cur);
                let done = r == 0.0
                    || match regime {
                        Regime::Discounted => alpha * r / (1.0 - alpha) < options.tol,
                        _ => r < options.tol,
                    };
                cur = next;
                if done {
                    return Ok(Evaluation { j: cur, exactness: Exactness::Iterative { iterations: k, residual: r } });
                }
            }
            let residual = bellman_t_mu(model, policy, &cur)?.dist(&cur);
            Err(Error::IterationCap {
                iterations: options.max_iter,
                residual,
                bound: match regime {
                    Regime::Discounted => BoundSide::TwoSided,
                    Regime::Negative => BoundSide::Upper,
                    Regime::Positive => BoundSide::Lower,
                },
                last: cur.into_inner(),
            })
        }
    }
}

/// Convenience wrapper: exact `J_μ` with default options.
pub fn policy_cost(model: &TotalCostModel, policy: &Policy) -> Result<ValueVector> {
    Ok(evaluate_policy(model, policy, &EvalOptions::default())?.j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fixtures::fixture;
    use crate::policy::Action;

    #[test]
    fn footnote9_go_policy() {
        let fx = fixture("FX-P2").unwrap();
        let ev = evaluate_policy(&fx.model, &Policy::deterministic(&fx.model, &[0, 1]), &EvalOptions::default()).unwrap();
        assert_eq!(ev.j, ValueVector::from_f64(&[0.0, 1.0]));
        assert_eq!(ev.exactness, Exactness::Exact);
    }

    #[test]
    fn prop51_parameter_sweep_is_exact() {
        let fx = fixture("FX-P3b").unwrap();
        for i in 1..10 {
            let t = i as f64 / 10.0;
            let pol = Policy::new(vec![
                Action::Mixed(vec![1.0]),
                Action::Affine { family: 0, t },
                Action::Mixed(vec![1.0]),
            ]);
            let j = policy_cost(&fx.model, &pol).unwrap();
            assert_eq!(j, ValueVector::from_f64(&[0.0, 1.0, 2.0]), "t = {t}");
        }
    }

    #[test]
    fn cost_one_self_loop_is_infinite() {
        let fx = fixture("FX-P3a").unwrap();
        let pol = Policy::new(vec![
            Action::Mixed(vec![1.0]),
            Action::Mixed(vec![1.0]),
            Action::Affine { family: 0, t: 0.5 },
        ]);
        let j = policy_cost(&fx.model, &pol).unwrap();
        assert!(j[1].is_pos_inf());
        assert!(j[2].is_pos_inf());
        assert_eq!(j[0], ExtReal::ZERO);
    }

    #[test]
    fn footnote8_stay_policy_costs_nothing() {
        let fx = fixture("FX-N2").unwrap();
        let j = policy_cost(&fx.model, &Policy::deterministic(&fx.model, &[0, 0])).unwrap();
        assert_eq!(j, ValueVector::from_f64(&[0.0, 0.0]));
    }

    #[test]
    fn negative_closed_class_diverges() {
        use crate::model::StateSpec;
        let m = TotalCostModel::new(
            Regime::Negative,
            1.0,
            vec![
                StateSpec::new("0").control("loop", -1.0, &[(0, 1.0)]),
                StateSpec::new("1").control("a", 0.0, &[(0, 0.25), (1, 0.75)]),
            ],
        )
        .unwrap();
        let j = policy_cost(&m, &Policy::uniform(&m)).unwrap();
        assert!(j[0].is_neg_inf() && j[1].is_neg_inf());
    }

    #[test]
    fn iterative_matches_exact_on_discounted_fixture() {
        let fx = fixture("FX-D").unwrap();
        let pol = Policy::uniform(&fx.model);
        let exact = policy_cost(&fx.model, &pol).unwrap();
        let opts = EvalOptions { method: EvalMethod::Iterative, ..Default::default() };
        let it = evaluate_policy(&fx.model, &pol, &opts).unwrap();
        assert!(exact.dist(&it.j) < 1e-10);
        assert!(matches!(it.exactness, Exactness::Iterative { .. }));
    }

    #[test]
    fn iteration_cap_reports_bound() {
        let fx = fixture("FX-P4").unwrap();
        let pol = Policy::uniform(&fx.model);
        let opts = EvalOptions { method: EvalMethod::Iterative, max_iter: 1, tol: 1e-12 };
        match evaluate_policy(&fx.model, &pol, &opts) {
            Err(Error::IterationCap { bound, .. }) => assert_eq!(bound, BoundSide::Lower),
            other => panic!("unexpected {other:?}"),
        }
    }
}
