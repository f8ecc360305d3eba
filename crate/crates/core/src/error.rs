use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the engine.
///
/// The variants map onto the CLI's exit codes: domain errors exit with 2,
/// budget overruns with 3 and store integrity failures with 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("unsupported digit system: {0}")]
    Unsupported(String),

    #[error("coverage gap: no records for q in {lo}..={hi}")]
    Coverage { lo: u64, hi: u64 },

    #[error("store integrity error in {path}: {detail}")]
    Integrity { path: PathBuf, detail: String },

    #[error("schema mismatch: expected {expected}, found {found}")]
    Schema { expected: String, found: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn budget(msg: impl Into<String>) -> Self {
        Error::Budget(msg.into())
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Unsupported(_) | Error::Coverage { .. } => 2,
            Error::Budget(_) => 3,
            Error::Integrity { .. } | Error::Schema { .. } => 4,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
