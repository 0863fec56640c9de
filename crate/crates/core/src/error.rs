use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value violates one of the model bounds.
    #[error("validation error: {0}")]
    Validation(String),

    /// An operation was called with arguments outside its contract.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Mooney-Rivlin evaluation at a non-positive Jacobian.
    #[error("domain error: det F = {det} must be positive")]
    Domain { det: f64 },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("linear solve residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    LinearSolve { residual: f64, tolerance: f64 },

    #[error("time step {dt:.3e} fell below dt_min = {dt_min:.3e}")]
    DtUnderflow { dt: f64, dt_min: f64 },

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("restart file {path}: {message}")]
    Restart { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by invalid user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::ConfigParse { .. } | Error::Precondition(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
