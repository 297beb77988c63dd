use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("cannot parse `{value}` in column `{column}` at row {row}")]
    TypeParse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("unknown category `{value}` in column `{column}` at row {row}")]
    UnknownCategory {
        row: usize,
        column: String,
        value: String,
    },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("outcome is degenerate: every label equals {0}")]
    DegenerateOutcome(u8),
    #[error("column `{0}` still has missing cells")]
    MissingCellsPresent(String),
    #[error("only one class present in the labels")]
    SingleClass,
    #[error("input is constant")]
    ConstantInput,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("contingency table is degenerate: {0}")]
    DegenerateTable(String),
    #[error("groups are degenerate: {0}")]
    DegenerateGroups(String),
    #[error("too few rows: have {rows}, need more than {needed}")]
    TooFewRows { rows: usize, needed: usize },
    #[error("expected count is zero in the contingency table")]
    ZeroExpectedCount,
    #[error("domain `{0}` has no columns")]
    EmptyDomain(String),
    #[error("non-finite gradient in boosting round {round}: {details}")]
    NonFiniteGradient { round: usize, details: String },
    #[error("dimension mismatch: expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("column `{0}` has no observed values")]
    AllMissingColumn(String),
    #[error("no predictor columns available to impute `{0}`")]
    NoPredictorsAvailable(String),
    #[error("{n} features exceed the exact-enumeration limit of {max}")]
    TooManyFeatures { n: usize, max: usize },
    #[error("background set is empty")]
    EmptyBackground,
    #[error("attribution matrix is empty or has fewer than two rows")]
    EmptyMatrix,
    #[error("number of predictors is zero")]
    ZeroPredictors,
    #[error("bootstrap could not draw a two-class replicate after {attempts} attempts")]
    DegenerateResample { attempts: usize },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            InvalidArgument(_) | InvalidSpec(_) | UnsupportedVersion(_) => ErrorCategory::Config,
            NonFiniteGradient { .. } | DegenerateResample { .. } => ErrorCategory::Numeric,
            _ => ErrorCategory::Data,
        }
    }
}
