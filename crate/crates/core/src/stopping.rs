//! The optimal stopping problem attached to `(model, θ, J)`.
//!
//! Its states are the pairs `(x, u) ∈ S × C`, where `C` indexes atomic
//! controls up to the largest control count, plus an absorbing cost-free
//! state `∞`. At `(x, u)` one may stop, paying `J(x)`, or (when `x ∈ B`)
//! continue, paying `g(x, u)` and moving to `(x', u')` with `x' ~ q(·|x,u)`
//! and `u' ~ μ(·|x')`. Pairs `(x, u)` with `u` not a control of `x` are
//! built for completeness but cannot be reached from `Γ`.
//!
//! Everything here is computed from the stopping problem itself, without
//! going through `F_θ`, so that it can serve as an independent check on
//! [`crate::ftheta::q_fixed_point`].

use crate::chain::divergent_states;
use crate::error::{check_len, Error, Result};
use crate::ext_real::ExtReal;
use crate::ftheta::{f_theta_apply, monotone_side, q_fixed_point, FixedPointCertificate, FixedPointOptions, Theta};
use crate::model::{Regime, StateSpec, TotalCostModel};
use crate::operators::expectation;
use crate::vectors::{QVector, StateSet, ValueVector};

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingProblem {
    regime: Regime,
    discount: f64,
    num_base_states: usize,
    width: usize,
    j: ValueVector,
    b: StateSet,
    in_gamma: Vec<bool>,
    can_continue: Vec<bool>,
    continue_cost: Vec<ExtReal>,
    /// Continuation kernel `q°(·|(x,u), 1)` over pair-state indices.
    kernel: Vec<Vec<(usize, f64)>>,
}

impl StoppingProblem {
    /// Index of the pair-state `(x, u)`.
    pub fn index(&self, x: usize, u: usize) -> usize {
        x * self.width + u
    }

    /// Index of the absorbing state `∞`.
    pub fn infinity(&self) -> usize {
        self.num_base_states * self.width
    }

    /// Number of states including `∞`.
    pub fn len(&self) -> usize {
        self.infinity() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pair_of(&self, i: usize) -> Option<(usize, usize)> {
        (i < self.infinity()).then(|| (i / self.width, i % self.width))
    }

    pub fn stop_cost(&self, i: usize) -> ExtReal {
        match self.pair_of(i) {
            Some((x, _)) => self.j[x],
            None => ExtReal::ZERO,
        }
    }

    /// Whether continuing is permitted at pair-state `i`.
    pub fn can_continue(&self, i: usize) -> bool {
        i < self.infinity() && self.can_continue[i]
    }

    pub fn continue_cost(&self, i: usize) -> ExtReal {
        self.continue_cost[i]
    }

    pub fn continue_kernel(&self, i: usize) -> &[(usize, f64)] {
        &self.kernel[i]
    }

    /// Pair-states in `(B × C) ∖ Γ`: constructed but unreachable from `Γ`.
    pub fn is_unreachable(&self, i: usize) -> bool {
        i < self.infinity() && !self.in_gamma[i]
    }

    pub fn in_gamma(&self, i: usize) -> bool {
        i < self.infinity() && self.in_gamma[i]
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn b(&self) -> &StateSet {
        &self.b
    }

    /// The stopping problem as an ordinary model: control 0 stops, control 1
    /// (where permitted) continues.
    pub fn as_model(&self) -> Result<TotalCostModel> {
        let inf = self.infinity();
        let mut states = Vec::with_capacity(self.len());
        for i in 0..inf {
            let (x, u) = self.pair_of(i).unwrap();
            let mut s = StateSpec::new(format!("({x},{u})")).control("stop", self.stop_cost(i), &[(inf, 1.0)]);
            if self.can_continue[i] {
                s = s.control("continue", self.continue_cost[i], &self.kernel[i]);
            }
            states.push(s);
        }
        states.push(StateSpec::new("∞").control("halt", 0.0, &[(inf, 1.0)]));
        let m = TotalCostModel::new(self.regime, self.discount, states)?;
        Ok(if self.regime == Regime::Discounted {
            let bound = self
                .continue_cost
                .iter()
                .chain(self.j.iter())
                .fold(0.0f64, |acc, c| acc.max(c.value().abs()));
            m.with_cost_bound(bound)
        } else {
            m
        })
    }
}

/// Builds the stopping problem for `(model, θ, J)`, using `μ` itself as
/// the extension kernel off `B`.
pub fn build_stopping(model: &TotalCostModel, theta: &Theta, j: &ValueVector) -> Result<StoppingProblem> {
    model.require_atomic("build_stopping")?;
    theta.policy.validate(model)?;
    check_len(model.num_states(), j.len())?;
    check_len(model.num_states(), theta.b.universe())?;
    let n = model.num_states();
    let width = model.max_controls();
    let size = n * width;
    let regime = model.regime();
    let k_cost = match regime {
        Regime::Negative => ExtReal::ZERO,
        Regime::Positive => ExtReal::INFINITY,
        Regime::Discounted => ExtReal::new(model.sup_abs_cost().value().max(j.iter().fold(0.0f64, |a, v| a.max(v.value().abs())))),
    };
    let mut in_gamma = vec![false; size];
    let mut can_continue = vec![false; size];
    let mut continue_cost = vec![ExtReal::ZERO; size];
    let mut kernel = vec![Vec::new(); size];
    for x in 0..n {
        for u in 0..width {
            let i = x * width + u;
            let gamma = u < model.controls(x).len();
            in_gamma[i] = gamma;
            can_continue[i] = theta.b.contains(x);
            if gamma {
                let c = &model.controls(x)[u];
                continue_cost[i] = c.cost;
                for &(y, p) in &c.transitions {
                    for (v, w) in theta.policy.support(y) {
                        kernel[i].push((y * width + v, p * w));
                    }
                }
            } else {
                continue_cost[i] = k_cost;
                kernel[i].push((size, 1.0));
            }
        }
    }
    Ok(StoppingProblem {
        regime,
        discount: model.discount(),
        num_base_states: n,
        width,
        j: j.clone(),
        b: theta.b.clone(),
        in_gamma,
        can_continue,
        continue_cost,
        kernel,
    })
}

fn continuation_value(problem: &StoppingProblem, i: usize, v: &[ExtReal]) -> ExtReal {
    problem.continue_cost[i] + ExtReal::new(problem.discount) * expectation(&problem.kernel[i], v)
}

/// The stopping Bellman operator `T_o`.
pub fn t_o_apply(problem: &StoppingProblem, v: &[ExtReal]) -> Result<Vec<ExtReal>> {
    check_len(problem.len(), v.len())?;
    let inf = problem.infinity();
    Ok((0..problem.len())
        .map(|i| {
            if i == inf {
                return ExtReal::ZERO;
            }
            let stop = problem.stop_cost(i);
            if problem.can_continue[i] {
                stop.min(continuation_value(problem, i, v))
            } else {
                stop
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingSolution {
    /// Optimal values `V*` over all pair-states and `∞`.
    pub v: Vec<ExtReal>,
    /// Continuation values `f*(x, u)` on `Γ_B`, keyed by pair-state index.
    pub f: Vec<(usize, ExtReal)>,
    /// Continue flags of an optimal stationary stopping policy (D and P).
    pub policy: Option<Vec<bool>>,
    pub certificate: FixedPointCertificate,
}

/// Solves the stopping problem by iterating `T_o` from zero, with states of
/// infinite optimal cost fixed in advance by graph classification.
pub fn solve_stopping(problem: &StoppingProblem, options: &FixedPointOptions) -> Result<StoppingSolution> {
    let regime = problem.regime;
    let alpha = problem.discount;
    let pins = divergent_states(&problem.as_model()?);
    let inf = regime.divergent_value().unwrap_or(ExtReal::ZERO);
    let pin = |v: Vec<ExtReal>| -> Vec<ExtReal> {
        v.into_iter().enumerate().map(|(i, x)| if pins.contains(i) { inf } else { x }).collect()
    };
    let mut v = pin(vec![ExtReal::ZERO; problem.len()]);
    let mut cert = None;
    let mut residual = f64::INFINITY;
    for k in 1..=options.max_iter {
        let next = pin(t_o_apply(problem, &v)?);
        residual = crate::ext_real::sup_dist(&next, &v);
        v = next;
        let stabilized = residual == 0.0;
        let error_bound = (regime == Regime::Discounted).then(|| alpha * residual / (1.0 - alpha));
        if stabilized || error_bound.map_or(residual < options.tol, |e| e < options.tol) {
            cert = Some(FixedPointCertificate {
                iterations: k,
                residual,
                tolerance: options.tol,
                bound: monotone_side(regime),
                error_bound,
                stabilized,
            });
            break;
        }
    }
    let certificate = cert.ok_or_else(|| Error::IterationCap {
        iterations: options.max_iter,
        residual,
        bound: monotone_side(regime),
        last: v.clone(),
    })?;
    let f = (0..problem.infinity())
        .filter(|&i| problem.can_continue[i] && problem.in_gamma[i])
        .map(|i| (i, continuation_value(problem, i, &v)))
        .collect();
    let policy = (regime != Regime::Negative).then(|| {
        (0..problem.len())
            .map(|i| problem.can_continue(i) && continuation_value(problem, i, &v) < problem.stop_cost(i))
            .collect()
    });
    Ok(StoppingSolution { v, f, policy, certificate })
}

/// `Q(x, u) = g(x, u) + α Σ_z q°(z | (x, u), 1) V*(z)` over the base model's
/// atomic pairs.
pub fn reconstruct_q(problem: &StoppingProblem, v_star: &[ExtReal], model: &TotalCostModel) -> Result<QVector> {
    check_len(problem.len(), v_star.len())?;
    check_len(problem.num_base_states, model.num_states())?;
    Ok(QVector(
        model.pairs().iter().map(|&(x, u)| continuation_value(problem, problem.index(x, u), v_star)).collect(),
    ))
}

/// Result of the finite linear program for an upper bound on `Q_{θ,J}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpBound {
    /// Maximal feasible `W̄`, indexed by state (entries off `B` are unused and
    /// set to `J`).
    pub w: ValueVector,
    pub q_bar: QVector,
    pub objective: f64,
    pub certificate: LpCertificate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpCertificate {
    pub iterations: usize,
    pub residual: f64,
    /// Largest constraint violation of `W̄` (≤ 0 means feasible).
    pub max_violation: f64,
    /// `min (F_θ(Q̄; J) − Q̄)`; nonnegative when `Q̄ ≤ F_θ(Q̄; J)` holds.
    pub upper_margin: f64,
    /// `min (Q̄ − Q_{θ,J})`; nonnegative when `Q̄ ≥ Q_{θ,J}` holds.
    pub lower_margin: f64,
}

impl LpCertificate {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation <= tol && self.upper_margin >= -tol && self.lower_margin >= -tol
    }
}

/// Right-hand side of the LP constraints at every `x ∈ B`:
/// `min{J(x), g(x,μ(x)) + Σ_{x'∉B} q J + Σ_{x'∈B} q W}`; `J` elsewhere.
pub fn lp_constraint_map(model: &TotalCostModel, theta: &Theta, j: &ValueVector, w: &ValueVector) -> Result<ValueVector> {
    let choices = theta
        .policy
        .choices()
        .ok_or_else(|| Error::InvalidPolicy("the finite LP needs a nonrandomized policy".into()))?;
    let alpha = ExtReal::new(model.discount());
    Ok(ValueVector(
        (0..model.num_states())
            .map(|x| {
                if !theta.b.contains(x) {
                    return j[x];
                }
                let c = &model.controls(x)[choices[x]];
                let cont: ExtReal = c
                    .transitions
                    .iter()
                    .map(|&(y, p)| ExtReal::new(p) * if theta.b.contains(y) { w[y] } else { j[y] })
                    .sum();
                j[x].min(c.cost + alpha * cont)
            })
            .collect(),
    ))
}

/// Default LP weights `ρ(x) = (1/|B|) / (J(x) + 1)` on `B`.
pub fn default_rho(theta: &Theta, j: &ValueVector) -> Vec<f64> {
    let nb = theta.b.len().max(1) as f64;
    (0..j.len()).map(|x| if theta.b.contains(x) { 1.0 / nb / (j[x].value() + 1.0) } else { 0.0 }).collect()
}

/// Maximal feasible solution of the finite LP (regime P, nonrandomized
/// `μ`), obtained by downward iteration of the constraint map from `J`,
/// and the induced `Q̄`. The maximal solution does not depend on the
/// strictly positive weights `ρ`; they only enter the reported objective.
pub fn lp_upper_bound(model: &TotalCostModel, theta: &Theta, j: &ValueVector, rho: Option<&[f64]>) -> Result<LpBound> {
    if model.regime() != Regime::Positive {
        return Err(Error::InvalidArgument("the finite LP bound is defined for regime P".into()));
    }
    model.require_atomic("lp_upper_bound")?;
    theta.policy.validate(model)?;
    check_len(model.num_states(), j.len())?;
    check_len(model.num_states(), theta.b.universe())?;
    if let Some(x) = theta.b.indices().into_iter().find(|&x| !j[x].is_finite()) {
        return Err(Error::InfiniteStoppingCost { state: x });
    }
    let rho = match rho {
        Some(r) => {
            check_len(model.num_states(), r.len())?;
            if let Some(x) = theta.b.indices().into_iter().find(|&x| r[x] <= 0.0) {
                return Err(Error::InvalidArgument(format!("ρ must be strictly positive on B (state {x})")));
            }
            r.to_vec()
        }
        None => default_rho(theta, j),
    };

    const MAX_ITER: usize = 1_000_000;
    let mut w = j.clone();
    let mut iterations = 0;
    let mut residual = 0.0;
    let mut converged = false;
    while !converged && iterations < MAX_ITER {
        let next = lp_constraint_map(model, theta, j, &w)?;
        residual = next.dist(&w);
        w = next;
        iterations += 1;
        let scale = w.iter().fold(1.0f64, |a, v| a.max(v.value().abs()));
        converged = residual <= 1e-15 * scale;
    }
    if !converged {
        return Err(Error::IterationCap {
            iterations,
            residual,
            bound: crate::error::BoundSide::Upper,
            last: w.into_inner(),
        });
    }

    let alpha = ExtReal::new(model.discount());
    let q_bar = QVector(
        model
            .pairs()
            .iter()
            .map(|&(x, u)| {
                let c = &model.controls(x)[u];
                let cont: ExtReal = c
                    .transitions
                    .iter()
                    .map(|&(y, p)| ExtReal::new(p) * if theta.b.contains(y) { w[y] } else { j[y] })
                    .sum();
                c.cost + alpha * cont
            })
            .collect(),
    );

    let rhs = lp_constraint_map(model, theta, j, &w)?;
    let max_violation = theta
        .b
        .indices()
        .into_iter()
        .map(|x| w[x].value() - rhs[x].value())
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let objective = theta.b.indices().into_iter().map(|x| rho[x] * w[x].value()).sum();
    let f_bar = f_theta_apply(model, theta, &q_bar, j)?;
    let upper_margin = min_gap(&f_bar, &q_bar);
    let (q_theta, _) = q_fixed_point(model, theta, j, &FixedPointOptions { tol: 1e-13, ..Default::default() })?;
    let lower_margin = min_gap(&q_bar, &q_theta);
    Ok(LpBound {
        w,
        q_bar,
        objective,
        certificate: LpCertificate { iterations, residual, max_violation, upper_margin, lower_margin },
    })
}

/// `min_i (a_i − b_i)` with equal infinities counted as zero gap.
fn min_gap(a: &[ExtReal], b: &[ExtReal]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| if x == y { 0.0 } else { (*x - *y).value() })
        .fold(f64::INFINITY, f64::min)
}
