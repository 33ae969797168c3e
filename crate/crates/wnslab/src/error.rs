//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two fields (or a field and a config) disagree on grid shape.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("config error at {path}:{line}: {msg}")]
    Config {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("snapshot file {path}: {msg}")]
    Snapshot { path: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Threshold bisection could not place the bounded-part norm in the
    /// requested window.
    #[error("threshold search failed: {0}")]
    ThresholdSearch(String),

    /// Rescaling a field would push its content outside the resolvable
    /// mode range (or an unsupported scale factor was requested).
    #[error("rescale failed: {0}")]
    Rescale(String),

    #[error("calibration failed: {0}")]
    Calibration(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Convenience constructor for io errors carrying the path.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
