use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian: max |m - m^dagger| = {defect:e} exceeds tolerance {tol:e}")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("eigen solver did not converge")]
    NonConvergence,
    #[error("argument {x} outside supported range |x| <= {limit}")]
    OutOfSupport { x: f64, limit: f64 },
    #[error("invalid bath sector (j2={j2}, m2={m2}) for N={n_bath}")]
    InvalidSector { j2: i64, m2: i64, n_bath: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("zero-norm vector in {0}")]
    ZeroNorm(&'static str),
    #[error("jump ({alpha}, nu={nu}) is unreachable from the current state")]
    Unreachable { alpha: usize, nu: usize },
    #[error("ensemble needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("model file: {0}")]
    ModelFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
