use thiserror::Error;

use crate::ingest::CostUnit;

pub type Result<T, E = ArbError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ArbError {
    #[error("invalid attempt record: {0}")]
    InvalidRecord(String),

    #[error("invalid pricing entry for `{provider}`: {reason}")]
    InvalidPricing { provider: String, reason: String },

    #[error("cost unit mismatch: expected {expected}, found {found}")]
    UnitMismatch { expected: CostUnit, found: CostUnit },

    #[error("all attempts of `{provider}` on `{problem}` have zero cost")]
    DegenerateCost { provider: String, problem: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("pass@{k} requested with only {n} observed attempts")]
    OutOfSupport { n: u64, k: u64 },

    #[error("unknown {kind} `{id}`")]
    NotFound { kind: &'static str, id: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("frontiers are defined on different performance grids")]
    GridMismatch,

    #[error("train and test splits share {0} problem(s)")]
    OverlappingSplits(usize),

    #[error("search budget {budget} cannot pay for a single comparison at {per_query} per query")]
    EmptySample { budget: f64, per_query: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ArbError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        ArbError::InvalidArgument(msg.into())
    }

    pub(crate) fn not_found(kind: &'static str, id: impl Into<String>) -> Self {
        ArbError::NotFound {
            kind,
            id: id.into(),
        }
    }
}
