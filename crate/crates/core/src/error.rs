use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("out of vocabulary token: {0:?}")]
    OutOfVocabulary(String),

    #[error("offset {offset} out of range for relation of cardinality {len}")]
    OffsetOutOfRange { offset: u64, len: u64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("zero-norm vector has no cosine similarity")]
    ZeroVector,

    #[error("output buffer too small: need {needed} elements, have {available}")]
    BufferTooSmall { needed: usize, available: usize },

    #[error("buffer budget of {0} bytes cannot hold a single fp32 cell")]
    BudgetTooSmall(u64),

    #[error("threshold out of range [-1, 1]: {0}")]
    ThresholdOutOfRange(f32),

    #[error("tile {0} lies outside the input relations")]
    TileOutOfRange(String),

    #[error("relation {0:?} must be row-normalized")]
    NotNormalized(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
