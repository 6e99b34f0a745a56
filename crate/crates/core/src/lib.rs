//! Total-cost dynamic programming on finite models.
//!
//! The crate covers discounted (D), nonpositive-cost (N) and
//! nonnegative-cost (P) problems with extended-real costs, the classical
//! value and policy iteration methods, and the mixed value and policy
//! iteration built on the Q-factor mappings `F_θ`.

pub mod chain;
pub mod error;
pub mod evaluation;
pub mod ext_real;
pub mod ftheta;
pub mod model;
pub mod models;
pub mod operators;
pub mod policy;
pub mod solvers;
pub mod stopping;
pub mod transform;
pub mod vectors;

pub use error::{BoundSide, Error, Result};
pub use ext_real::ExtReal;
pub use model::{
    validate_model, AffineFamily, AffineTransition, AtomicControl, Interval, Regime, StateSpec, TotalCostModel,
    ValidationReport,
};
pub use policy::{Action, Policy};
pub use vectors::{QVector, StateSet, ValueVector};
