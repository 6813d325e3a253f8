use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid energy levels: {0}")]
    InvalidLevels(String),
    #[error("invalid bath: {0}")]
    InvalidBath(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state index {index} out of range for {n} states")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("event set is empty")]
    EmptyEvent,
    #[error("support of q is not contained in support of p (state {0})")]
    SupportViolation(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("exact work law would exceed the atom cap ({atoms} > {cap}); use sampling instead")]
    AtomCapExceeded { atoms: usize, cap: usize },
    #[error("path enumeration would visit {paths} paths, cap is {cap}")]
    EnumerationCapExceeded { paths: f64, cap: usize },
    #[error("size cap exceeded: {0}")]
    SizeCap(String),
    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
