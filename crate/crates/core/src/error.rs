use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A normal-ordered monomial did not factor into the known per-mode
    /// operator combinations.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("no sign change of the lowest eigenvalue in [{lo}, {hi}] (f(lo) = {f_lo:e}, f(hi) = {f_hi:e})")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("degenerate Krylov subspace: every overlap eigenvalue is below {threshold:e}")]
    DegenerateSubspace { threshold: f64 },

    #[error("numerical anomaly: {0}")]
    NumericalAnomaly(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
