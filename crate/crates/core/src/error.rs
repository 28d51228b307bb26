use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MmkError>;

#[derive(Debug, Error)]
pub enum MmkError {
    #[error("invalid location: {0}")]
    InvalidLocation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cannot ingest {}: {reason}", path.display())]
    Ingestion { path: PathBuf, reason: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("codebook training failed: {0}")]
    Training(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("classifier error: {0}")]
    Classifier(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(MmkError::DimensionMismatch { expected, got })
    }
}
