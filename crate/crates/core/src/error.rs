use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum RfiError {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("sampler error: {0}")]
    Sampler(String),

    #[error("knockoff error: {0}")]
    Knockoff(String),

    #[error("graph error: {0}")]
    Graph(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, RfiError>;
