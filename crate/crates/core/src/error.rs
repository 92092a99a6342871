use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("parse error at row {row}, column {column}: cannot read {value:?} as a finite number")]
    Parse {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("label error at row {row}: {value:?} is not 0 or 1")]
    Label { row: usize, value: String },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("window length {m} exceeds series length {n}")]
    WindowTooLong { m: usize, n: usize },

    #[error("invalid window length {0}")]
    InvalidWindow(usize),

    #[error("series too short: n = {n} but the window m = {m} requires n >= 2m = {}", 2 * m)]
    SeriesTooShort { n: usize, m: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("length mismatch in {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("missing data: method {method:?} has no score for dataset {dataset:?}")]
    MissingData { method: String, dataset: String },

    #[error("input of length {n} exceeds the brute-force size guard of {limit}")]
    SizeGuard { n: usize, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
