use thiserror::Error;

/// Which shift operator failed to be bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftSide {
    Left,
    Right,
}

impl std::fmt::Display for ShiftSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ShiftSide::Left => f.write_str("left shift L"),
            ShiftSide::Right => f.write_str("right shift R"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid index {index}: basis indices start at 1")]
    InvalidIndex { index: i64 },

    #[error("{0} is unbounded for this weight sequence")]
    UnboundedOperator(ShiftSide),

    #[error("unsupported weight: {0}")]
    UnsupportedWeight(String),

    #[error("contraction violated: ||S|| = {norm_s} must lie in (0, 1)")]
    ContractionViolated { norm_s: f64 },

    #[error(
        "lambda = {lambda} must exceed ||R|| = {norm_r} so that S = R/lambda is a contraction"
    )]
    LambdaTooSmall { lambda: f64, norm_r: f64 },

    #[error("decay too slow: beta = {beta} must exceed ln(lambda) = {ln_lambda}")]
    DecayTooSlow { beta: f64, ln_lambda: f64 },

    #[error("growth condition violated: mu = {mu} must exceed lambda * ||T_-1|| = {threshold}")]
    GrowthCondition { mu: f64, threshold: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("overflow: {0}; use the lazy evaluation path instead")]
    Overflow(String),

    #[error("index {k} outside schedule range 1..={len}")]
    OutOfRange { k: usize, len: usize },

    #[error("no decay certificate: {0}")]
    NoCertificate(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
