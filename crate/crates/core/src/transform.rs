//! Reduction of a model with transition-dependent costs and discount
//! factors to an undiscounted total-cost model.

use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::model::{Regime, StateSpec, TotalCostModel, PROB_TOL};

/// One successor of a control in a transition-discount model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountedTransition {
    pub state: usize,
    pub prob: f64,
    /// Cost `ĝ(x, u, x')` incurred on this transition.
    pub cost: f64,
    /// Discount factor `β(x, u, x') ∈ [0, 1]` applied to everything after it.
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscountedControl {
    pub label: String,
    pub transitions: Vec<DiscountedTransition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDiscountModel {
    pub names: Vec<String>,
    pub controls: Vec<Vec<DiscountedControl>>,
}

/// Name of the cost-free absorbing state appended by [`convert_transition_discount`].
pub const ABSORBING_STATE: &str = "∞";

/// Builds the equivalent undiscounted model: `q̃(x'|x,u) = β·q`, the
/// missing mass routed to a new absorbing cost-free state, and one-stage
/// cost `Σ ĝ·q`.
pub fn convert_transition_discount(base: &TransitionDiscountModel, sign: Regime) -> Result<TotalCostModel> {
    if sign == Regime::Discounted {
        return Err(Error::InvalidArgument("target regime must be N or P".into()));
    }
    let n = base.controls.len();
    if base.names.len() != n {
        return Err(Error::Dimension { expected: n, got: base.names.len() });
    }
    let mut states = Vec::with_capacity(n + 1);
    for (x, controls) in base.controls.iter().enumerate() {
        let mut spec = StateSpec::new(base.names[x].clone());
        for c in controls {
            if let Some(tr) = c.transitions.iter().find(|t| !(0.0..=1.0).contains(&t.beta)) {
                return Err(Error::InvalidArgument(format!(
                    "state {x}, control {}: β = {} outside [0, 1]",
                    c.label, tr.beta
                )));
            }
            let cost: f64 = c.transitions.iter().map(|t| t.cost * t.prob).sum();
            let mut rows: Vec<(usize, f64)> =
                c.transitions.iter().filter(|t| t.beta * t.prob > 0.0).map(|t| (t.state, t.beta * t.prob)).collect();
            let kept: f64 = rows.iter().map(|r| r.1).sum();
            if kept > 1.0 + PROB_TOL {
                return Err(Error::Numerical(format!(
                    "state {x}, control {}: transformed row sums to {kept}",
                    c.label
                )));
            }
            let deficit = 1.0 - kept;
            if deficit > 0.0 {
                rows.push((n, deficit));
            }
            spec = spec.control(&c.label, ExtReal::new(cost), &rows);
        }
        states.push(spec);
    }
    states.push(StateSpec::new(ABSORBING_STATE).control("stop", 0.0, &[(n, 1.0)]));
    TotalCostModel::new(sign, 1.0, states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;

    fn base(beta: f64) -> TransitionDiscountModel {
        let tr = |state, prob, cost| DiscountedTransition { state, prob, cost, beta };
        TransitionDiscountModel {
            names: vec!["a".into(), "b".into()],
            controls: vec![
                vec![DiscountedControl { label: "x".into(), transitions: vec![tr(0, 0.5, 1.0), tr(1, 0.5, 3.0)] }],
                vec![
                    DiscountedControl { label: "y".into(), transitions: vec![tr(1, 1.0, 0.0)] },
                    DiscountedControl { label: "z".into(), transitions: vec![tr(0, 1.0, 2.0)] },
                ],
            ],
        }
    }

    #[test]
    fn unit_beta_leaves_absorbing_state_unreachable() {
        let m = convert_transition_discount(&base(1.0), Regime::Positive).unwrap();
        assert!(validate_model(&m).is_ok());
        assert_eq!(m.num_states(), 3);
        assert!(m.states()[..2].iter().flat_map(|s| &s.controls).all(|c| c.transitions.iter().all(|&(y, _)| y != 2)));
        assert_eq!(m.controls(0)[0].cost, ExtReal::new(2.0));
    }

    #[test]
    fn zero_beta_routes_everything_to_absorbing_state() {
        let m = convert_transition_discount(&base(0.0), Regime::Positive).unwrap();
        for s in &m.states()[..2] {
            for c in &s.controls {
                assert_eq!(c.transitions, vec![(2, 1.0)]);
            }
        }
    }

    #[test]
    fn rejects_discounted_target() {
        assert!(convert_transition_discount(&base(0.5), Regime::Discounted).is_err());
    }
}
