//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row} sums to {sum}, outside tolerance {tolerance}")]
    RowSum { row: usize, sum: f64, tolerance: f64 },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("label {label} at index {index} is not below class count {classes}")]
    InvalidLabel {
        index: usize,
        label: usize,
        classes: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate bandwidth: pooled values have zero spread")]
    DegenerateBandwidth,

    #[error("class {0} has no samples")]
    EmptyClass(usize),

    #[error("unknown token '{token}' in class '{class}'")]
    UnknownToken { token: String, class: String },

    #[error("row {0} has zero off-diagonal spread")]
    DegenerateRow(usize),

    #[error("alpha {0} outside [0, 1]")]
    AlphaRange(f64),

    #[error("beta {0} outside [0, 100]")]
    BetaRange(f64),

    #[error("similarity matrix invariant violated: {0}")]
    SimilarityInvariantViolation(String),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error in {source_name} line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::RowSum { .. } => "RowSumError",
            Error::NonFinite { .. } => "NonFiniteError",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::InvalidLabel { .. } => "InvalidLabel",
            Error::InsufficientData(_) => "InsufficientData",
            Error::DegenerateBandwidth => "DegenerateBandwidth",
            Error::EmptyClass(_) => "EmptyClass",
            Error::UnknownToken { .. } => "UnknownToken",
            Error::DegenerateRow(_) => "DegenerateRow",
            Error::AlphaRange(_) => "AlphaRange",
            Error::BetaRange(_) => "BetaRange",
            Error::SimilarityInvariantViolation(_) => "SimilarityInvariantViolation",
            Error::Divergence { .. } => "DivergenceError",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Parse { .. } => "ParseError",
            Error::Io(_) => "IoError",
        }
    }

    /// Process exit code: 3 for numeric failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence { .. }
            | Error::DegenerateBandwidth
            | Error::DegenerateRow(_) => 3,
            _ => 2,
        }
    }
}

pub(crate) fn mismatch(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}
