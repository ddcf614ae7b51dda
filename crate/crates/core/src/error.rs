use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A required column is missing or the schema file is malformed.
    #[error("schema error: {0}")]
    Schema(String),

    /// Input data violates a documented precondition or invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A split or resampling request cannot be satisfied by the data.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A metric or statistic is undefined for the given input.
    #[error("undefined: {0}")]
    Undefined(String),

    /// Training diverged or produced non-finite values.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(String),
}
