use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spectrum not strictly increasing and nonnegative at index {index}")]
    NotMonotone { index: usize },

    #[error("spectrum needs at least {needed} values, has {got}")]
    TooShort { needed: usize, got: usize },

    #[error("Newton iteration for Bessel zero {n} did not converge")]
    NewtonDivergence { n: usize },

    #[error("window [{lo}, {hi}] around lambda_{n} exceeds the truncation (lambda_N = {lambda_n_max})")]
    WindowExceedsTruncation { n: usize, lo: f64, hi: f64, lambda_n_max: f64 },

    #[error("precision escalation exhausted at {digits} digits: residual {achieved:e} > target {target:e}")]
    EscalationExhausted { digits: u32, achieved: f64, target: f64 },

    #[error("Gram factorization lost positivity at pivot {pivot} ({digits} digits)")]
    NotPositiveDefinite { pivot: usize, digits: u32 },

    #[error("duplicate or unsorted lambda at index {index}")]
    DuplicateLambda { index: usize },

    #[error("truncation of length {have} is too short: need {need}")]
    InsufficientTruncation { have: usize, need: usize },

    #[error("lambda_1 must be positive for this operation")]
    ZeroLambda,

    #[error("integrand envelope failed to certify decay: {0}")]
    EnvelopeNotCertified(String),

    #[error("calibration drifted by {drift:.3} on {constant} between refinements")]
    CalibrationUnstable { constant: String, drift: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),

    #[error("cell (m={m}, T={t}): {source}")]
    Cell { m: usize, t: f64, source: Box<Error> },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
