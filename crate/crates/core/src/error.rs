use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("patch side {side} exceeds image size {rows}x{cols}")]
    PatchTooLarge {
        side: usize,
        rows: usize,
        cols: usize,
    },

    #[error("matrix is not Hermitian positive definite")]
    NotPositiveDefinite,

    #[error("decomposition failed to converge: {0}")]
    Decomposition(String),

    #[error("non-finite value encountered at iteration {iteration} ({what})")]
    NonFinite {
        iteration: usize,
        what: &'static str,
    },

    #[error("at least {required} inputs are required, got {actual}")]
    TooFewInputs { required: usize, actual: usize },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn shape(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            expected: expected.into(),
            actual: actual.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 1 usage, 2 I/O, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Image { .. } | Error::Format { .. } => 2,
            Error::NotPositiveDefinite | Error::Decomposition(_) | Error::NonFinite { .. } => 3,
            Error::ShapeMismatch { .. }
            | Error::InvalidParameter(_)
            | Error::PatchTooLarge { .. }
            | Error::TooFewInputs { .. }
            | Error::Config(_) => 1,
        }
    }
}
