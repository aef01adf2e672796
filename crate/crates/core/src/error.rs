use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),
    #[error("degenerate rank: {0}")]
    DegenerateRank(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
