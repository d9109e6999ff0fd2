use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Bad magic, bad header JSON, or an unsupported dtype.
    #[error("format error: {0}")]
    Format(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    /// Payload decoded but violates a value invariant (non-finite float, class id out of range).
    #[error("data error: {0}")]
    Data(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("index {index} out of range for extent {extent}")]
    Bounds { index: usize, extent: usize },

    /// A probability outside the open interval (0, 1).
    #[error("{series}[{index}] = {value} is outside (0, 1)")]
    Domain {
        series: &'static str,
        index: usize,
        value: f64,
    },

    #[error("need at least two slices along z, found {0}")]
    InsufficientSlices(usize),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
