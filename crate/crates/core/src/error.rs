use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gradient matrix: {0}")]
    InvalidGradients(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("gradient covariance is zero while the mean gradient is not")]
    DegenerateCovariance,

    #[error("shrunk covariance is numerically singular")]
    SingularCovariance,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("sample index {index} out of range for {n} samples")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("controller already stopped at iteration {0}")]
    ControllerStopped(usize),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("dataset is empty after ingestion")]
    EmptyDataset,

    #[error("label column has {0} distinct values, expected at most 2")]
    NonBinaryLabels(usize),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("unknown criterion `{0}`")]
    UnknownCriterion(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
