//! Fixture library, random instances and the countable-state example.

pub mod example51;
pub mod fixtures;
pub mod random;

pub use example51::{example51_limit, example51_t, example51_transfinite_level, ExtNat, TailConstantVector};
pub use fixtures::{fixture, Fixture, FIXTURE_NAMES};
pub use random::{random_model, RandomParams};
