//! Cost functions on states (`J`) and on state-control pairs (`Q`).

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::ext_real::{sup_dist, ExtReal};
use crate::model::{Regime, TotalCostModel};

macro_rules! ext_vector {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub Vec<ExtReal>);

        impl $name {
            pub fn constant(len: usize, v: ExtReal) -> Self {
                $name(vec![v; len])
            }

            pub fn zeros(len: usize) -> Self {
                Self::constant(len, ExtReal::ZERO)
            }

            pub fn from_f64(values: &[f64]) -> Self {
                $name(values.iter().map(|&v| ExtReal::new(v)).collect())
            }

            pub fn to_f64(&self) -> Vec<f64> {
                self.0.iter().map(|v| v.value()).collect()
            }

            /// Sup-norm distance.
            pub fn dist(&self, other: &Self) -> f64 {
                sup_dist(&self.0, &other.0)
            }

            /// Elementwise `self ≤ other + slack`.
            pub fn le(&self, other: &Self, slack: f64) -> bool {
                self.0.iter().zip(&other.0).all(|(a, b)| *a <= *b + ExtReal::new(slack))
            }

            /// Elementwise scaling by a nonnegative constant (`0·∞ = 0`).
            pub fn scaled(&self, c: f64) -> Self {
                $name(self.0.iter().map(|v| v.scale(c)).collect())
            }

            pub fn map(&self, f: impl Fn(ExtReal) -> ExtReal) -> Self {
                $name(self.0.iter().map(|&v| f(v)).collect())
            }

            /// Whether every entry respects the regime's sign constraint.
            pub fn conforms(&self, regime: Regime) -> bool {
                self.0.iter().all(|&v| regime.admits(v))
            }

            pub fn into_inner(self) -> Vec<ExtReal> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = [ExtReal];

            fn deref(&self) -> &[ExtReal] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [ExtReal] {
                &mut self.0
            }
        }

        impl From<Vec<ExtReal>> for $name {
            fn from(v: Vec<ExtReal>) -> Self {
                $name(v)
            }
        }
    };
}

ext_vector!(ValueVector);
ext_vector!(QVector);

impl QVector {
    /// `Q(x, u)` by state and control index.
    pub fn at(&self, model: &TotalCostModel, x: usize, u: usize) -> ExtReal {
        self.0[model.pair_index(x, u)]
    }

    /// Broadcasts a state function onto every pair: `Q(x, u) = J(x)`.
    pub fn broadcast(model: &TotalCostModel, j: &ValueVector) -> Self {
        QVector(model.pairs().iter().map(|&(x, _)| j[x]).collect())
    }
}

/// Sup-norm distance of the pair `(J, Q)` to `(J', Q')`.
pub fn joint_dist(j: &ValueVector, q: &QVector, j2: &ValueVector, q2: &QVector) -> f64 {
    j.dist(j2).max(q.dist(q2))
}

/// A subset of states, stored as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSet(pub Vec<bool>);

impl StateSet {
    pub fn empty(n: usize) -> Self {
        StateSet(vec![false; n])
    }

    pub fn full(n: usize) -> Self {
        StateSet(vec![true; n])
    }

    pub fn from_indices(n: usize, members: &[usize]) -> Self {
        let mut s = StateSet::empty(n);
        for &x in members {
            s.0[x] = true;
        }
        s
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0[x]
    }

    pub fn len(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn universe(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    pub fn complement(&self) -> StateSet {
        StateSet(self.0.iter().map(|b| !b).collect())
    }

    /// Compact descriptor such as `{0,2}`.
    pub fn describe(&self) -> String {
        let idx: Vec<String> = self.indices().iter().map(|i| i.to_string()).collect();
        format!("{{{}}}", idx.join(","))
    }
}
