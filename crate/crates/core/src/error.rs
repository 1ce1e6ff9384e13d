use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("resource cap exceeded: {what} = {requested} > {cap}")]
    ResourceCap {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error("polynomial degree {degree} exceeds lattice order {order}")]
    DegreeOverflow { degree: usize, order: usize },

    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal mass {off_norm:e}, n = {n})")]
    NoConvergence {
        sweeps: usize,
        off_norm: f64,
        n: usize,
    },

    #[error(
        "matrix is not positive semi-definite: eigenvalue {min_eigenvalue:e} below -{threshold:e}"
    )]
    NotPsd { min_eigenvalue: f64, threshold: f64 },

    #[error(
        "shift action is not well defined on the Gram vectors: residual {residual:e} > {bound:e}"
    )]
    WellDefinedness { residual: f64, bound: f64 },

    #[error("left and right Gram matrices differ by {residual:e} (tolerance {tol:e})")]
    GramMismatch { residual: f64, tol: f64 },

    #[error("no colligation orientation reproduces the Taylor coefficients (best mismatch {mismatch:e})")]
    TaylorMismatch { mismatch: f64 },

    #[error("state equation is singular at this point (condition estimate {condition:e})")]
    SingularState { condition: f64 },

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
