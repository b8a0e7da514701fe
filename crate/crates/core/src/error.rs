use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid rate function: {0}")]
    InvalidRate(String),
    #[error("invalid initial law: {0}")]
    InvalidInitialLaw(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("time range [{s}, {t}] outside drift grid [{lo}, {hi}]")]
    OutOfGrid { s: f64, t: f64, lo: f64, hi: f64 },
    #[error("event budget of {budget} events exceeded at t = {time}")]
    BudgetExceeded { budget: u64, time: f64 },
    #[error("mass drift {drift:e} exceeds tolerance {tolerance:e} at t = {time}")]
    MassDrift { drift: f64, tolerance: f64, time: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}
