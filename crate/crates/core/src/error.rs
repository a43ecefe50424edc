use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the super-resolution pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed image data: {0}")]
    Format(String),

    #[error("image must have non-zero dimensions, got {height}x{width}")]
    EmptyImage { height: usize, width: usize },

    #[error("data length {len} does not match {height}x{width}")]
    DataLength {
        height: usize,
        width: usize,
        len: usize,
    },

    #[error("non-finite pixel value at index {0}")]
    NonFinite(usize),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("{height}x{width} is not divisible by factor {factor}")]
    Indivisible {
        height: usize,
        width: usize,
        factor: usize,
    },

    #[error("image {height}x{width} is smaller than the {window}x{window} window")]
    TooSmall {
        height: usize,
        width: usize,
        window: usize,
    },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("solver produced non-finite values: {0}")]
    NonFiniteSolve(String),

    #[error("model error: {0}")]
    Model(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
