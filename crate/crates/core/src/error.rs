use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed delimited input: {0}")]
    Csv(#[from] csv::Error),

    #[error("input header is missing schema columns: {}", missing.join(", "))]
    SchemaMismatch { missing: Vec<String> },

    #[error("cannot stratify: {0}")]
    Stratification(String),

    #[error("feature {name} ({code}) has no observed value in the training partition")]
    UnimputableFeature { name: String, code: String },

    #[error("{kind} cannot be trained on single-class labels")]
    DegenerateTraining { kind: String },

    #[error("shape mismatch: expected width {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid hyperparameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("platt calibration did not converge after {iterations} iterations (|grad| = {gradient:e})")]
    Calibration { iterations: usize, gradient: f64 },

    #[error("{operation} is not supported for {kind}")]
    Unsupported { operation: &'static str, kind: String },

    #[error("ROC is undefined: labels contain a single class")]
    UndefinedRoc,

    #[error("recall is undefined for class {class}: no actual members")]
    UndefinedClass { class: u8 },

    #[error("bootstrap: {0}")]
    Bootstrap(String),

    #[error("artifact format error: {0}")]
    Artifact(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
