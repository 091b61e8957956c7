use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("{what} index {index} out of range (len {len})")]
    OutOfRange { what: &'static str, index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "{method} did not converge on `{matrix}` within {iterations} iterations (relative residual {residual:.3e})"
    )]
    NotConverged { method: &'static str, matrix: String, iterations: usize, residual: f64 },

    #[error("matrix `{matrix}` is not positive definite ({detail})")]
    NotPositiveDefinite { matrix: String, detail: String },

    #[error("point ({x}, {y}) lies outside triangle {triangle}")]
    PointOutside { triangle: usize, x: f64, y: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("explicit scheme became unstable at step {step} (non-finite or overflowing iterate)")]
    Unstable { step: usize },

    #[error("time step {k:.6e} exceeds 0.95 x the CFL limit {k_max:.6e}; use the CFL override to run anyway")]
    CflViolation { k: f64, k_max: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
