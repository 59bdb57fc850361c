use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed file: {0}")]
    MalformedFile(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("image too small: {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("image must be square with power-of-two side, got {width}x{height}")]
    NonSquare { width: usize, height: usize },

    #[error("reference variance {0:e} is degenerate")]
    DegenerateVariance(f64),

    #[error("no mask candidates supplied")]
    EmptyCandidates,

    #[error("mask has no foreground pixels")]
    EmptyMask,

    #[error("region covers the entire image")]
    FullMask,

    #[error("empty input")]
    EmptyInput,

    #[error("backend failure in stage `{stage}`: {message}")]
    BackendFailure { stage: String, message: String },

    #[error("key file: {0}")]
    KeyFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn backend(stage: impl Into<String>, message: impl Into<String>) -> Self {
        Error::BackendFailure {
            stage: stage.into(),
            message: message.into(),
        }
    }
}
