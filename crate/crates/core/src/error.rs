use thiserror::Error;

use crate::prob::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(Violation),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("index sets overlap: {0}")]
    OverlappingIndexSets(String),

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("L1 distance {0} outside (0, 1/2]")]
    L1OutOfRange(f64),

    #[error("missing q entry {index} (q has {len} entries)")]
    MissingQ { index: usize, len: usize },

    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },

    #[error("invalid FLC: {0}")]
    Validation(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid of {requested} points exceeds the cap of {cap}; {hint}")]
    ResourceCap { requested: u128, cap: u128, hint: String },

    #[error("FLC is not point-to-point: {0}")]
    NotPointToPoint(String),

    #[error("region extraction needs exactly two rate variables, found {0}")]
    NotTwoRate(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid PFA: {0}")]
    InvalidPfa(String),

    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),

    #[error("invalid rational {0:?}")]
    InvalidRational(String),
}

impl Error {
    pub(crate) fn parse_json(err: &serde_json::Error) -> Self {
        Error::Parse {
            line: err.line(),
            column: err.column(),
            msg: err.to_string(),
        }
    }
}
