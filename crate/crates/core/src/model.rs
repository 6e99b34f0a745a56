//! Finite total-cost models: atomic controls plus affine interval families.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext_real::ExtReal;

/// Absolute tolerance for probability-row and distribution checks.
pub const PROB_TOL: f64 = 1e-12;

/// Problem class of a total-cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Discounted, bounded one-stage cost, `α < 1`.
    #[serde(rename = "D")]
    Discounted,
    /// Undiscounted, nonpositive cost.
    #[serde(rename = "N")]
    Negative,
    /// Undiscounted, nonnegative cost.
    #[serde(rename = "P")]
    Positive,
}

impl Regime {
    pub fn code(self) -> &'static str {
        match self {
            Regime::Discounted => "D",
            Regime::Negative => "N",
            Regime::Positive => "P",
        }
    }

    pub fn from_code(code: &str) -> Option<Regime> {
        match code {
            "D" => Some(Regime::Discounted),
            "N" => Some(Regime::Negative),
            "P" => Some(Regime::Positive),
            _ => None,
        }
    }

    /// Whether `v` respects the sign constraint of this regime.
    pub fn admits(self, v: ExtReal) -> bool {
        match self {
            Regime::Discounted => v.is_finite(),
            Regime::Negative => v <= ExtReal::ZERO,
            Regime::Positive => v >= ExtReal::ZERO,
        }
    }

    /// The infinity that monotone iteration can run off to in this regime.
    pub fn divergent_value(self) -> Option<ExtReal> {
        match self {
            Regime::Discounted => None,
            Regime::Negative => Some(ExtReal::NEG_INFINITY),
            Regime::Positive => Some(ExtReal::INFINITY),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Parameter interval `⊆ [0, 1]` with per-endpoint closedness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn contains(&self, t: f64) -> bool {
        let above = if self.lo_closed { t >= self.lo } else { t > self.lo };
        let below = if self.hi_closed { t <= self.hi } else { t < self.hi };
        above && below
    }

    /// Endpoints that belong to the interval.
    pub fn closed_endpoints(&self) -> impl Iterator<Item = f64> + '_ {
        let lo = self.lo_closed.then_some(self.lo);
        let hi = self.hi_closed.then_some(self.hi);
        lo.into_iter().chain(hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicControl {
    pub label: String,
    pub cost: ExtReal,
    /// Sparse successor distribution `(state, probability)`.
    pub transitions: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransition {
    pub state: usize,
    pub p0: f64,
    pub p1: f64,
}

impl AffineTransition {
    pub fn prob_at(&self, t: f64) -> f64 {
        self.p0 + self.p1 * t
    }
}

/// A continuum of controls indexed by `t` in an interval, with cost
/// `c0 + c1·t` and successor probabilities `p0(x') + p1(x')·t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFamily {
    pub label: String,
    pub interval: Interval,
    pub cost: [f64; 2],
    pub transitions: Vec<AffineTransition>,
}

impl AffineFamily {
    pub fn cost_at(&self, t: f64) -> f64 {
        self.cost[0] + self.cost[1] * t
    }

    /// Successor distribution at parameter `t`, zero entries dropped.
    pub fn transitions_at(&self, t: f64) -> Vec<(usize, f64)> {
        self.transitions
            .iter()
            .map(|tr| (tr.state, tr.prob_at(t)))
            .filter(|&(_, p)| p != 0.0)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub name: String,
    pub controls: Vec<AtomicControl>,
    pub families: Vec<AffineFamily>,
}

impl StateSpec {
    pub fn new(name: impl Into<String>) -> Self {
        StateSpec { name: name.into(), controls: Vec::new(), families: Vec::new() }
    }

    pub fn control(mut self, label: &str, cost: impl Into<ExtReal>, transitions: &[(usize, f64)]) -> Self {
        self.controls.push(AtomicControl {
            label: label.to_string(),
            cost: cost.into(),
            transitions: transitions.to_vec(),
        });
        self
    }

    pub fn family(mut self, family: AffineFamily) -> Self {
        self.families.push(family);
        self
    }
}

/// A finite-state total-cost model.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalCostModel {
    regime: Regime,
    discount: f64,
    cost_bound: Option<f64>,
    states: Vec<StateSpec>,
    pair_offsets: Vec<usize>,
    pairs: Vec<(usize, usize)>,
}

impl TotalCostModel {
    /// Builds a model, checking only structural soundness (successor indices
    /// in range, discount in `[0, 1]`). Semantic invariants are reported by
    /// [`validate_model`].
    pub fn new(regime: Regime, discount: f64, states: Vec<StateSpec>) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::InvalidModel("model has no states".into()));
        }
        if !(0.0..=1.0).contains(&discount) {
            return Err(Error::InvalidModel(format!("discount {discount} outside [0, 1]")));
        }
        for (x, s) in states.iter().enumerate() {
            let bad = s
                .controls
                .iter()
                .flat_map(|c| c.transitions.iter().map(|&(y, _)| y))
                .chain(s.families.iter().flat_map(|f| f.transitions.iter().map(|t| t.state)))
                .find(|&y| y >= n);
            if let Some(y) = bad {
                return Err(Error::InvalidModel(format!(
                    "state {x} ({}) has a transition to unknown state index {y}",
                    s.name
                )));
            }
        }
        let mut pair_offsets = Vec::with_capacity(n + 1);
        let mut pairs = Vec::new();
        for (x, s) in states.iter().enumerate() {
            pair_offsets.push(pairs.len());
            pairs.extend((0..s.controls.len()).map(|u| (x, u)));
        }
        pair_offsets.push(pairs.len());
        Ok(TotalCostModel { regime, discount, cost_bound: None, states, pair_offsets, pairs })
    }

    pub fn with_cost_bound(mut self, bound: f64) -> Self {
        self.cost_bound = Some(bound);
        self
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn cost_bound(&self) -> Option<f64> {
        self.cost_bound
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[StateSpec] {
        &self.states
    }

    pub fn state(&self, x: usize) -> &StateSpec {
        &self.states[x]
    }

    pub fn controls(&self, x: usize) -> &[AtomicControl] {
        &self.states[x].controls
    }

    pub fn families(&self, x: usize) -> &[AffineFamily] {
        &self.states[x].families
    }

    pub fn has_affine_families(&self) -> bool {
        self.states.iter().any(|s| !s.families.is_empty())
    }

    /// Errors unless the model has atomic controls only.
    pub fn require_atomic(&self, op: &str) -> Result<()> {
        if self.has_affine_families() {
            Err(Error::AffineUnsupported(op.to_string()))
        } else {
            Ok(())
        }
    }

    /// Number of (state, atomic control) pairs.
    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// All atomic pairs in state-major order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair_index(&self, x: usize, u: usize) -> usize {
        debug_assert!(u < self.states[x].controls.len());
        self.pair_offsets[x] + u
    }

    /// Range of pair indices belonging to state `x`.
    pub fn pair_range(&self, x: usize) -> std::ops::Range<usize> {
        self.pair_offsets[x]..self.pair_offsets[x + 1]
    }

    pub fn max_controls(&self) -> usize {
        self.states.iter().map(|s| s.controls.len()).max().unwrap_or(0)
    }

    /// Largest `|g|` over atomic controls and family cost closures.
    pub fn sup_abs_cost(&self) -> ExtReal {
        let mut m = ExtReal::ZERO;
        for s in &self.states {
            for c in &s.controls {
                m = m.max(ExtReal::new(c.cost.value().abs()));
            }
            for f in &s.families {
                for t in [f.interval.lo, f.interval.hi] {
                    m = m.max(ExtReal::new(f.cost_at(t).abs()));
                }
            }
        }
        m
    }

    /// Same model under a different regime tag and discount.
    pub fn retagged(&self, regime: Regime, discount: f64) -> Result<Self> {
        let mut m = TotalCostModel::new(regime, discount, self.states.clone())?;
        m.cost_bound = self.cost_bound;
        Ok(m)
    }

    /// Looks up a state by name.
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }
}

/// One violated model invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub location: String,
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.location, self.rule, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_rule(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    fn push(&mut self, location: String, rule: &'static str, detail: String) {
        self.violations.push(Violation { location, rule, detail });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("OK");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

pub const RULE_EMPTY_CONTROLS: &str = "state has no controls";
pub const RULE_DISTRIBUTION_SUM: &str = "distribution sum";
pub const RULE_NEGATIVE_PROB: &str = "probabilities must be nonnegative";
pub const RULE_D_DISCOUNT: &str = "regime D requires α < 1";
pub const RULE_UNDISCOUNTED: &str = "regimes N and P require α = 1";
pub const RULE_D_COST: &str = "regime D requires finite |g| ≤ b";
pub const RULE_N_COST: &str = "regime N requires g ≤ 0";
pub const RULE_P_COST: &str = "regime P requires g ≥ 0";
pub const RULE_INTERVAL: &str = "affine interval must satisfy 0 ≤ lo < hi ≤ 1";
pub const RULE_AFFINE_SUMS: &str = "affine coefficients must satisfy Σp0 = 1 and Σp1 = 0";
pub const RULE_AFFINE_RANGE: &str = "affine probabilities must lie in [0, 1] on the interval closure";

/// Checks every model invariant and lists each violation with its location.
pub fn validate_model(model: &TotalCostModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let regime = model.regime();
    let alpha = model.discount();
    match regime {
        Regime::Discounted if alpha >= 1.0 => {
            report.push("model".into(), RULE_D_DISCOUNT, format!("α = {alpha}"))
        }
        Regime::Negative | Regime::Positive if alpha != 1.0 => {
            report.push("model".into(), RULE_UNDISCOUNTED, format!("α = {alpha}"))
        }
        _ => {}
    }
    let bound = model.cost_bound().map(ExtReal::new);

    let cost_ok = |c: ExtReal| -> Option<&'static str> {
        match regime {
            Regime::Discounted => {
                let within = c.is_finite() && bound.is_none_or(|b| ExtReal::new(c.value().abs()) <= b);
                (!within).then_some(RULE_D_COST)
            }
            Regime::Negative => (c > ExtReal::ZERO).then_some(RULE_N_COST),
            Regime::Positive => (c < ExtReal::ZERO).then_some(RULE_P_COST),
        }
    };

    for (x, s) in model.states().iter().enumerate() {
        if s.controls.is_empty() && s.families.is_empty() {
            report.push(format!("state {x} ({})", s.name), RULE_EMPTY_CONTROLS, String::new());
        }
        for c in &s.controls {
            let loc = format!("state {x} ({}), control {}", s.name, c.label);
            if let Some(rule) = cost_ok(c.cost) {
                report.push(loc.clone(), rule, format!("g = {}", c.cost));
            }
            if c.transitions.iter().any(|&(_, p)| p < 0.0 || !p.is_finite()) {
                report.push(loc.clone(), RULE_NEGATIVE_PROB, String::new());
            }
            let sum: f64 = c.transitions.iter().map(|&(_, p)| p).sum();
            if (sum - 1.0).abs() > PROB_TOL {
                report.push(loc, RULE_DISTRIBUTION_SUM, format!("row sums to {sum}"));
            }
        }
        for f in &s.families {
            let loc = format!("state {x} ({}), family {}", s.name, f.label);
            let iv = f.interval;
            if !(0.0 <= iv.lo && iv.lo < iv.hi && iv.hi <= 1.0) {
                report.push(loc.clone(), RULE_INTERVAL, format!("[{}, {}]", iv.lo, iv.hi));
            }
            let s0: f64 = f.transitions.iter().map(|t| t.p0).sum();
            let s1: f64 = f.transitions.iter().map(|t| t.p1).sum();
            if (s0 - 1.0).abs() > PROB_TOL || s1.abs() > PROB_TOL {
                report.push(loc.clone(), RULE_AFFINE_SUMS, format!("Σp0 = {s0}, Σp1 = {s1}"));
            }
            for t in [iv.lo, iv.hi] {
                if f
                    .transitions
                    .iter()
                    .any(|tr| tr.prob_at(t) < -PROB_TOL || tr.prob_at(t) > 1.0 + PROB_TOL)
                {
                    report.push(loc.clone(), RULE_AFFINE_RANGE, format!("at t = {t}"));
                }
                if let Some(rule) = cost_ok(ExtReal::new(f.cost_at(t))) {
                    report.push(loc.clone(), rule, format!("cost {} at t = {t}", f.cost_at(t)));
                }
            }
        }
    }
    report
}

/// Returns the model if it validates, otherwise an error listing violations.
pub fn require_valid(model: &TotalCostModel) -> Result<()> {
    let report = validate_model(model);
    if report.is_ok() {
        Ok(())
    } else {
        Err(Error::InvalidModel(report.to_string()))
    }
}
