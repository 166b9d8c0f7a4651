//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller supplied an unusable configuration (bad flag, infeasible
    /// spec, empty selector suite, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A runtime contract was violated (mask/document length mismatch,
    /// out-of-range token id, malformed structure annotations, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Malformed input data (embedding file, dataset file, model file).
    #[error("format error: {0}")]
    Format(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at batch {batch}: {message}")]
    Training { batch: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI process exit code: 1 for configuration problems, 2 for data or
    /// contract problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            _ => 2,
        }
    }
}
