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

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("calibration failure: {0}")]
    Calibration(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("node sets differ: {only_left} only in left {left:?}, {only_right} only in right {right:?}", only_left = left.len(), only_right = right.len())]
    NodeSetMismatch { left: Vec<String>, right: Vec<String> },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    /// Stable short name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::DegenerateData(_) => "degenerate_data",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Sampling(_) => "sampling",
            Error::Calibration(_) => "calibration",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::NodeSetMismatch { .. } => "node_set_mismatch",
            Error::Serde(_) => "serde",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
