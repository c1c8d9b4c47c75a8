use thiserror::Error;

/// Errors produced by the erasure-robustness toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,
    #[error("non-finite input")]
    NonFinite,
    #[error("erasure ratio out of range: {0} (expected 0 <= beta < 1)")]
    ErasureRatioOutOfRange(f64),
    #[error("no surviving rows: budget {budget} with {rows} rows")]
    NoSurvivingRows { budget: usize, rows: usize },
    #[error("instance too large for oracle: {0} rows (limit 22)")]
    OracleTooLarge(usize),
    #[error("Lambert W domain: {0}")]
    LambertDomain(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("no surviving rows at this beta: m = {m} < 1/(1 - beta) = {min_rows}")]
    NoSurvivingRowsAtBeta { m: usize, min_rows: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("too many supports: C({n}, {s}) = {count} exceeds {limit}")]
    TooManySupports {
        n: usize,
        s: usize,
        count: u128,
        limit: u128,
    },
    #[error("unsupported net dimension {0}: deterministic nets exist for s <= 3, use a sampled net")]
    UnsupportedNet(usize),
    #[error("invalid band: lo = {lo}, hi = {hi}")]
    InvalidBand { lo: f64, hi: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
