use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: u64, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("alignment error: expected {expected} {what}, got {got}")]
    Alignment {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("non-finite training loss at epoch {epoch}, batch {batch} (lr = {lr:e})")]
    Diverged { epoch: usize, batch: usize, lr: f64 },

    #[error("model/features trained on different feature set (bundle {expected}, input {got})")]
    ManifestMismatch { expected: String, got: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    /// True for errors caused by the numbers themselves rather than the data or config.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::Diverged { .. })
    }

    /// True for malformed or inconsistent input data.
    pub fn is_data(&self) -> bool {
        matches!(
            self,
            Error::Csv(_)
                | Error::MissingColumn(_)
                | Error::Parse { .. }
                | Error::Validation(_)
                | Error::Alignment { .. }
                | Error::ManifestMismatch { .. }
                | Error::Io { .. }
                | Error::Checkpoint(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
