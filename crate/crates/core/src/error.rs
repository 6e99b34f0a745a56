use thiserror::Error;

use crate::ext_real::ExtReal;

/// Which side of the true limit a truncated monotone iterate lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BoundSide {
    /// Iterate is below the limit (increasing iteration, regime P).
    Lower,
    /// Iterate is above the limit (decreasing iteration, regime N).
    Upper,
    /// Contraction iteration; the iterate carries a two-sided error bound.
    TwoSided,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("{0} is defined for atomic-only models; this model has affine families")]
    AffineUnsupported(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("affine infimum undefined: a = {a}, b = {b} carry opposite infinities")]
    OppositeInfinities { a: ExtReal, b: ExtReal },

    #[error("iteration cap of {iterations} reached (residual {residual:e}); last iterate is a {bound:?} bound")]
    IterationCap {
        iterations: usize,
        residual: f64,
        bound: BoundSide,
        last: Vec<ExtReal>,
    },

    #[error("J is infinite at state {state} of B; the finite linear program needs finite stopping costs on B")]
    InfiniteStoppingCost { state: usize },

    #[error("no stage count n ≤ {n_max} gives T^n(J) ≤ J + δ/2 (best margin {margin:e})")]
    NoStageCount { n_max: usize, margin: f64 },

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
