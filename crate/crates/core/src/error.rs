use thiserror::Error;

use crate::operator::Mode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("scalar mode mismatch: expected {expected:?}, found {found:?}")]
    ModeMismatch { expected: Mode, found: Mode },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian: entry ({row},{col}) is not the conjugate of ({col},{row})")]
    NotHermitian { row: usize, col: usize },

    #[error("expected {expected} entries for a {dim}x{dim} matrix, found {found}")]
    BadEntryCount { dim: usize, expected: usize, found: usize },

    #[error("zero operator at index {index}")]
    ZeroOperator { index: usize },

    #[error("operation requires the exact backend; {what}")]
    UnsupportedBackend { what: String },

    #[error("element {element}, party {party}: local factor is not positive semidefinite")]
    NotPositiveSemidefinite { element: usize, party: usize },

    #[error("duplicate POVM elements at index pairs {pairs:?}")]
    DuplicateElements { pairs: Vec<(usize, usize)> },

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("pruning failed: {0}")]
    PruneFailed(String),

    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
