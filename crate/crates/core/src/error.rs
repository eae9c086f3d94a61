//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by construction, data handling, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// A problem or option value violates its documented domain.
    #[error("invalid problem setup: {0}")]
    InvalidSpec(String),

    /// A coordinate fixed to zero carries a nonzero coefficient.
    #[error("coordinate {index} is fixed to zero but has value {value}")]
    InfeasibleFixation { index: usize, value: f64 },

    /// A factorization or solve lost positive definiteness / produced NaN.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Branching was requested on a node whose relaxation is already integral.
    #[error("no fractional coordinate to branch on")]
    NoFractional,

    /// Exhaustive enumeration refused: 2^p supports is past the cutoff.
    #[error("problem too large for exhaustive enumeration: p = {0} exceeds {1}")]
    TooLarge(usize, usize),

    /// A CSV field failed to parse; row and column are one-based.
    #[error("parse error at row {row}, column {col}: {msg}")]
    ParseError { row: usize, col: usize, msg: String },

    /// Inputs whose shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
