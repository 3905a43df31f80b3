use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("point outside the domain: {0}")]
    Domain(String),
    #[error("finite-difference stencil leaves the domain: {0}")]
    Stencil(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("no bracket for the eigenvalue inversion: {0}")]
    Inversion(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
