//! Seeded random models with oracle optimal costs.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::divergent_states;
use crate::error::{Error, Result};
use crate::evaluation::policy_cost;
use crate::ext_real::ExtReal;
use crate::model::{Regime, StateSpec, TotalCostModel};
use crate::operators::{bellman_t, greedy_select, h_backup, TieBreak};
use crate::vectors::ValueVector;

/// Probabilities are drawn as multiples of `1/UNITS` so rows sum to one exactly.
const UNITS: u32 = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomParams {
    pub num_states: usize,
    pub controls_per_state: usize,
    pub regime: Regime,
    /// Closed range of one-stage costs; must respect the regime's sign.
    pub cost_range: (f64, f64),
    /// Every control sends at least 1/8 of its mass to the absorbing,
    /// cost-free state 0, so every policy terminates with probability one.
    pub absorbing: bool,
    /// Discount factor for regime D (ignored otherwise).
    pub discount: f64,
    /// Largest number of successors besides state 0.
    pub max_successors: usize,
    /// Fraction of states (regime P) given an extra zero-cost control into
    /// other such states, so that `J*` has a nontrivial zero set.
    pub safe_fraction: f64,
}

impl RandomParams {
    pub fn new(regime: Regime, num_states: usize) -> Self {
        let cost_range = match regime {
            Regime::Discounted => (-1.0, 1.0),
            Regime::Negative => (-1.0, 0.0),
            Regime::Positive => (0.0, 1.0),
        };
        RandomParams {
            num_states,
            controls_per_state: 2,
            regime,
            cost_range,
            absorbing: true,
            discount: if regime == Regime::Discounted { 0.9 } else { 1.0 },
            max_successors: 3,
            safe_fraction: if regime == Regime::Positive { 0.25 } else { 0.0 },
        }
    }

    fn check(&self) -> Result<()> {
        let (lo, hi) = self.cost_range;
        let sign_ok = match self.regime {
            Regime::Discounted => lo.is_finite() && hi.is_finite(),
            Regime::Negative => hi <= 0.0,
            Regime::Positive => lo >= 0.0,
        };
        if self.num_states < 2 || self.controls_per_state == 0 || self.max_successors == 0 {
            return Err(Error::InvalidArgument("need ≥ 2 states, ≥ 1 control and ≥ 1 successor".into()));
        }
        if !(lo <= hi) || !sign_ok {
            return Err(Error::InvalidArgument(format!("cost range [{lo}, {hi}] does not fit regime {}", self.regime)));
        }
        if self.regime == Regime::Discounted && !(0.0..1.0).contains(&self.discount) {
            return Err(Error::InvalidArgument(format!("discount {} must lie in [0, 1)", self.discount)));
        }
        if !(0.0..=1.0).contains(&self.safe_fraction) {
            return Err(Error::InvalidArgument("safe fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

fn random_row(rng: &mut ChaCha8Rng, pool: &[usize], max_succ: usize, absorbing: bool) -> Vec<(usize, f64)> {
    let absorb = if absorbing { rng.gen_range(4..=16) } else { 0 };
    let k = rng.gen_range(1..=max_succ.min(pool.len()));
    let picks: Vec<usize> = sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect();
    let mut units = vec![1u32; k];
    for _ in 0..(UNITS - absorb - k as u32) {
        units[rng.gen_range(0..k)] += 1;
    }
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
    if absorb > 0 {
        row.push((0, absorb as f64 / UNITS as f64));
    }
    for (y, u) in picks.into_iter().zip(units) {
        match row.iter_mut().find(|(z, _)| *z == y) {
            Some(e) => e.1 += u as f64 / UNITS as f64,
            None => row.push((y, u as f64 / UNITS as f64)),
        }
    }
    row
}

/// Generates a model from `seed` and returns it with its optimal cost.
///
/// The oracle runs value iteration from zero (states of infinite optimal
/// cost fixed in advance) to a residual of `1e-12`, then replaces the
/// result by the exact cost of its greedy policy whenever that cost is a
/// fixed point of `T` to the same accuracy and every policy terminates.
pub fn random_model(seed: u64, params: &RandomParams) -> Result<(TotalCostModel, ValueVector)> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.num_states;
    let (lo, hi) = params.cost_range;
    let safe: Vec<bool> = (0..n).map(|x| x > 0 && rng.gen_bool(params.safe_fraction)).collect();
    let safe_pool: Vec<usize> = (0..n).filter(|&x| x == 0 || safe[x]).collect();
    let all: Vec<usize> = (0..n).collect();

    let mut states = vec![StateSpec::new("0").control("halt", 0.0, &[(0, 1.0)])];
    for x in 1..n {
        let mut s = StateSpec::new(x.to_string());
        for u in 0..params.controls_per_state {
            let cost = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
            let row = random_row(&mut rng, &all, params.max_successors, params.absorbing);
            s = s.control(&format!("c{u}"), cost, &row);
        }
        if safe[x] {
            let row = random_row(&mut rng, &safe_pool, params.max_successors, true);
            s = s.control("safe", 0.0, &row);
        }
        states.push(s);
    }
    let mut model = TotalCostModel::new(params.regime, params.discount, states)?;
    if params.regime == Regime::Discounted {
        model = model.with_cost_bound(lo.abs().max(hi.abs()));
    }
    let jstar = oracle(&model, params.absorbing)?;
    Ok((model, jstar))
}

fn oracle(model: &TotalCostModel, all_terminate: bool) -> Result<ValueVector> {
    let div = divergent_states(model);
    let inf = model.regime().divergent_value().unwrap_or(ExtReal::ZERO);
    let pin = |j: ValueVector| ValueVector((0..j.len()).map(|x| if div.contains(x) { inf } else { j[x] }).collect());
    let mut j = pin(ValueVector::zeros(model.num_states()));
    let mut converged = false;
    for _ in 0..1_000_000 {
        let next = pin(bellman_t(model, &j)?);
        let r = next.dist(&j);
        j = next;
        if r < 1e-12 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical("oracle value iteration did not converge".into()));
    }
    if all_terminate || model.regime() == Regime::Discounted {
        let mu = greedy_select(model, &h_backup(model, &j)?, 0.0, TieBreak::LowestIndex)?;
        let jmu = policy_cost(model, &mu)?;
        if bellman_t(model, &jmu)?.dist(&jmu) <= 1e-12 && jmu.dist(&j) <= 1e-9 {
            return Ok(jmu);
        }
    }
    Ok(j)
}
