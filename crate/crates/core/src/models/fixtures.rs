//! Small models with known optimal costs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::model::{AffineFamily, AffineTransition, Interval, Regime, StateSpec, TotalCostModel};
use crate::operators::h_backup;
use crate::vectors::{QVector, ValueVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub model: TotalCostModel,
    pub jstar: ValueVector,
    /// `Q* = H(J*)`, present for atomic-only fixtures.
    pub qstar: Option<QVector>,
    pub note: &'static str,
}

pub const FIXTURE_NAMES: [&str; 6] = ["FX-N2", "FX-P2", "FX-P3a", "FX-P3b", "FX-D", "FX-P4"];

fn atomic(name: &'static str, model: TotalCostModel, jstar: ValueVector, note: &'static str) -> Result<Fixture> {
    let qstar = h_backup(&model, &jstar)?;
    Ok(Fixture { name, model, jstar, qstar: Some(qstar), note })
}

/// Looks up a fixture by name.
pub fn fixture(name: &str) -> Result<Fixture> {
    match name {
        "FX-N2" => atomic(
            "FX-N2",
            TotalCostModel::new(
                Regime::Negative,
                1.0,
                vec![
                    StateSpec::new("0").control("loop", 0.0, &[(0, 1.0)]),
                    StateSpec::new("1").control("stay", 0.0, &[(1, 1.0)]).control("go", -1.0, &[(0, 1.0)]),
                ],
            )?,
            ValueVector::from_f64(&[0.0, -1.0]),
            "two states, nonpositive costs; staying at state 1 is greedy for J* but costs 0",
        ),
        "FX-P2" => atomic(
            "FX-P2",
            TotalCostModel::new(
                Regime::Positive,
                1.0,
                vec![
                    StateSpec::new("0").control("loop", 0.0, &[(0, 1.0)]),
                    StateSpec::new("1").control("stay", 0.0, &[(1, 1.0)]).control("go", 1.0, &[(0, 1.0)]),
                ],
            )?,
            ValueVector::from_f64(&[0.0, 0.0]),
            "two states, nonnegative costs; the go policy is suboptimal yet unimprovable",
        ),
        "FX-P3a" => {
            let family = AffineFamily {
                label: "u".into(),
                interval: Interval::open(0.0, 1.0),
                cost: [0.0, 0.0],
                transitions: vec![
                    AffineTransition { state: 1, p0: 0.0, p1: 1.0 },
                    AffineTransition { state: 0, p0: 1.0, p1: -1.0 },
                ],
            };
            let model = TotalCostModel::new(
                Regime::Positive,
                1.0,
                vec![
                    StateSpec::new("0").control("loop", 0.0, &[(0, 1.0)]),
                    StateSpec::new("1").control("loop", 1.0, &[(1, 1.0)]),
                    StateSpec::new("2").family(family).control("t", 1.0, &[(0, 1.0)]),
                ],
            )?;
            Ok(Fixture {
                name: "FX-P3a",
                model,
                jstar: ValueVector(vec![ExtReal::ZERO, ExtReal::INFINITY, ExtReal::ONE]),
                qstar: None,
                note: "continuum controls at state 2; value iteration from 0 stops short of J*(2) = 1",
            })
        }
        "FX-P3b" => {
            let family = AffineFamily {
                label: "u".into(),
                interval: Interval::open(0.0, 1.0),
                cost: [0.0, 1.0],
                transitions: vec![
                    AffineTransition { state: 0, p0: 0.0, p1: 1.0 },
                    AffineTransition { state: 1, p0: 1.0, p1: -1.0 },
                ],
            };
            let model = TotalCostModel::new(
                Regime::Positive,
                1.0,
                vec![
                    StateSpec::new("0").control("loop", 0.0, &[(0, 1.0)]),
                    StateSpec::new("1").family(family),
                    StateSpec::new("2").control("to1", 1.0, &[(1, 1.0)]),
                ],
            )?;
            Ok(Fixture {
                name: "FX-P3b",
                model,
                jstar: ValueVector::from_f64(&[0.0, 0.0, 1.0]),
                qstar: None,
                note: "no stationary policy is near optimal; every J_μ = (0, 1, 2) is a fixed point of T",
            })
        }
        "FX-D" => {
            let model = TotalCostModel::new(
                Regime::Discounted,
                0.9,
                vec![
                    StateSpec::new("0")
                        .control("a", 1.0, &[(0, 0.5), (1, 0.5)])
                        .control("b", 2.0, &[(2, 1.0)]),
                    StateSpec::new("1")
                        .control("a", 0.0, &[(0, 1.0)])
                        .control("b", 3.0, &[(1, 0.25), (2, 0.75)]),
                    StateSpec::new("2")
                        .control("a", -1.0, &[(0, 0.5), (2, 0.5)])
                        .control("b", 0.5, &[(1, 1.0)]),
                ],
            )?
            .with_cost_bound(3.0);
            let jstar = discounted_optimum(&model)?;
            atomic("FX-D", model, jstar, "three-state discounted model; J* from exhaustive policy evaluation")
        }
        "FX-P4" => atomic(
            "FX-P4",
            TotalCostModel::new(
                Regime::Positive,
                1.0,
                vec![
                    StateSpec::new("0").control("loop", 0.0, &[(0, 1.0)]),
                    StateSpec::new("1").control("down", 1.0, &[(0, 1.0)]).control("linger", 1.0, &[(0, 0.5), (1, 0.5)]),
                    StateSpec::new("2").control("down", 1.0, &[(1, 1.0)]).control("jump", 3.0, &[(0, 1.0)]),
                ],
            )?,
            ValueVector::from_f64(&[0.0, 1.0, 2.0]),
            "unit-cost chain 2 → 1 → 0 with costlier alternatives",
        ),
        other => Err(Error::UnknownFixture(other.to_string())),
    }
}

/// Optimal cost of a small discounted model, taken as the elementwise
/// minimum of `J_μ` over all nonrandomized stationary policies.
fn discounted_optimum(model: &TotalCostModel) -> Result<ValueVector> {
    let n = model.num_states();
    let alpha = model.discount();
    let counts: Vec<usize> = (0..n).map(|x| model.controls(x).len()).collect();
    let mut best = vec![f64::INFINITY; n];
    let mut choice = vec![0usize; n];
    loop {
        let mut a = DMatrix::<f64>::identity(n, n);
        let mut g = DVector::<f64>::zeros(n);
        for x in 0..n {
            let c = &model.controls(x)[choice[x]];
            g[x] = c.cost.value();
            for &(y, p) in &c.transitions {
                a[(x, y)] -= alpha * p;
            }
        }
        let j = a.lu().solve(&g).ok_or_else(|| Error::Numerical("singular evaluation system".into()))?;
        for x in 0..n {
            best[x] = best[x].min(j[x]);
        }
        let mut x = 0;
        loop {
            if x == n {
                return Ok(ValueVector::from_f64(&best));
            }
            choice[x] += 1;
            if choice[x] < counts[x] {
                break;
            }
            choice[x] = 0;
            x += 1;
        }
    }
}
