//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by dataset ingestion, model training, evaluation and
/// allocation.
#[derive(Debug, Error)]
pub enum Error {
    /// A row of an input file could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    /// Input data violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A function argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Correlation is undefined because an input vector is constant.
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    /// The least-squares design matrix is rank deficient.
    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    /// No assignment fits the face budget.
    #[error("infeasible budget {budget}: minimum feasible budget is {min_budget}")]
    Infeasible { budget: u64, min_budget: u64 },

    /// Exhaustive enumeration would exceed the configured cap.
    #[error("enumeration cap exceeded: {assignments} assignments > cap {cap}")]
    EnumerationCap { assignments: u128, cap: u128 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
