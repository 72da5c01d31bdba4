use thiserror::Error;

/// Errors produced by the wavephase library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("frame is not invertible: {0}")]
    NotInvertible(String),

    #[error("conjugate gradient stopped after {iterations} iterations with relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("corrupt grid file: {0}")]
    Corrupt(String),

    #[error("unsupported grid file version {0}")]
    UnsupportedVersion(u16),

    #[error("unsupported audio format: {0}")]
    UnsupportedAudio(String),

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
