use thiserror::Error;

use crate::lob::BookError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: seq {seq} does not follow {prev}")]
    OutOfOrder { line: usize, seq: u64, prev: u64 },

    #[error(transparent)]
    Book(#[from] BookError),

    #[error("snapshot too shallow: need bid/ask level {needed}, snapshot holds {available}")]
    InsufficientDepth { needed: usize, available: usize },

    #[error("trade empties the opposite side; return undefined")]
    UndefinedReturn,

    #[error("rank-deficient design (reciprocal condition {rcond:.3e}); dependent columns: {}", columns.join(", "))]
    RankDeficient { rcond: f64, columns: Vec<String> },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::OutOfOrder { .. } => "out_of_order",
            Error::Book(_) => "book_rejection",
            Error::InsufficientDepth { .. } => "insufficient_depth",
            Error::UndefinedReturn => "undefined_return",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::Calibration(_) => "calibration",
            Error::Invalid(_) => "invalid",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
