use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = IsacError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum IsacError {
    /// Range/azimuth geometry is undefined at the radar origin.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    /// Zero SNR: zero dwell or a beam pointed more than 90 degrees off target.
    #[error("no measurement: SNR is {0}")]
    NoMeasurement(f64),

    #[error("innovation covariance is numerically singular (condition number {0:e})")]
    SingularInnovation(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("insufficient experience: buffer holds {available}, batch needs {requested}")]
    InsufficientExperience { available: usize, requested: usize },

    #[error("index {index} out of range for {len} slots")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("environment full: all {0} target slots are occupied")]
    EnvironmentFull(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IsacError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IsacError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        IsacError::Config(msg.into())
    }
}
