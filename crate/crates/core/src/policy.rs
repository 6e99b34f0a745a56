//! Stationary policies.

use crate::error::{Error, Result};
use crate::model::{TotalCostModel, PROB_TOL};

/// What a stationary policy does at one state.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Probability of each atomic control at the state, dense over
    /// the state's controls.
    Mixed(Vec<f64>),
    /// A deterministic parameter inside one affine family.
    Affine { family: usize, t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    actions: Vec<Action>,
}

impl Policy {
    pub fn new(actions: Vec<Action>) -> Self {
        Policy { actions }
    }

    /// Nonrandomized policy over atomic controls: `choices[x]` is the
    /// control index used at `x`.
    pub fn deterministic(model: &TotalCostModel, choices: &[usize]) -> Self {
        let actions = choices
            .iter()
            .enumerate()
            .map(|(x, &u)| {
                let mut probs = vec![0.0; model.controls(x).len()];
                probs[u] = 1.0;
                Action::Mixed(probs)
            })
            .collect();
        Policy { actions }
    }

    /// Uniform randomization over atomic controls at every state.
    pub fn uniform(model: &TotalCostModel) -> Self {
        let actions = (0..model.num_states())
            .map(|x| {
                let m = model.controls(x).len();
                Action::Mixed(vec![1.0 / m as f64; m])
            })
            .collect();
        Policy { actions }
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn action(&self, x: usize) -> &Action {
        &self.actions[x]
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// The control used at `x` if the policy is nonrandomized there.
    pub fn deterministic_choice(&self, x: usize) -> Option<usize> {
        match &self.actions[x] {
            Action::Mixed(p) => {
                let support: Vec<usize> = p.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(u, _)| u).collect();
                (support.len() == 1 && p[support[0]] == 1.0).then(|| support[0])
            }
            Action::Affine { .. } => None,
        }
    }

    /// Control indices when every state uses a single atomic control.
    pub fn choices(&self) -> Option<Vec<usize>> {
        (0..self.actions.len()).map(|x| self.deterministic_choice(x)).collect()
    }

    pub fn is_atomic(&self) -> bool {
        self.actions.iter().all(|a| matches!(a, Action::Mixed(_)))
    }

    /// Sparse `(control, probability)` support at an atomic state.
    pub fn support(&self, x: usize) -> Vec<(usize, f64)> {
        match &self.actions[x] {
            Action::Mixed(p) => p.iter().enumerate().filter(|(_, &w)| w != 0.0).map(|(u, &w)| (u, w)).collect(),
            Action::Affine { .. } => Vec::new(),
        }
    }

    /// Replaces the action at each state where `mask` is false with the
    /// corresponding action of `other`.
    pub fn spliced(&self, other: &Policy, mask: &[bool]) -> Policy {
        let actions = self
            .actions
            .iter()
            .zip(&other.actions)
            .zip(mask)
            .map(|((a, b), &keep)| if keep { a.clone() } else { b.clone() })
            .collect();
        Policy { actions }
    }

    pub fn validate(&self, model: &TotalCostModel) -> Result<()> {
        if self.actions.len() != model.num_states() {
            return Err(Error::InvalidPolicy(format!(
                "policy covers {} states, model has {}",
                self.actions.len(),
                model.num_states()
            )));
        }
        for (x, a) in self.actions.iter().enumerate() {
            match a {
                Action::Mixed(p) => {
                    if p.len() != model.controls(x).len() {
                        return Err(Error::InvalidPolicy(format!(
                            "state {x}: distribution over {} controls, state has {}",
                            p.len(),
                            model.controls(x).len()
                        )));
                    }
                    if p.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
                        return Err(Error::InvalidPolicy(format!("state {x}: probability outside [0, 1]")));
                    }
                    let s: f64 = p.iter().sum();
                    if (s - 1.0).abs() > PROB_TOL {
                        return Err(Error::InvalidPolicy(format!("state {x}: distribution sums to {s}")));
                    }
                }
                Action::Affine { family, t } => {
                    let fam = model.families(x).get(*family).ok_or_else(|| {
                        Error::InvalidPolicy(format!("state {x}: no affine family {family}"))
                    })?;
                    if !fam.interval.contains(*t) {
                        return Err(Error::InvalidPolicy(format!(
                            "state {x}: parameter {t} outside the family interval"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Compact descriptor: `0,1,0` for nonrandomized atomic policies.
    pub fn describe(&self) -> String {
        self.actions
            .iter()
            .enumerate()
            .map(|(x, a)| match (self.deterministic_choice(x), a) {
                (Some(u), _) => u.to_string(),
                (None, Action::Mixed(p)) => {
                    let parts: Vec<String> = p.iter().map(|w| w.to_string()).collect();
                    format!("[{}]", parts.join("/"))
                }
                (None, Action::Affine { family, t }) => format!("f{family}@{t}"),
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}
