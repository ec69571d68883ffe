use thiserror::Error;

/// Errors produced by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("metric is not symmetric positive definite: {0}")]
    Metric(String),

    /// An iterative linear solve did not reach its residual target.
    #[error(
        "linear solver stalled after {iterations} iterations \
         (best residual {best_residual:e}, target {target:e})"
    )]
    SolverStall {
        iterations: usize,
        best_residual: f64,
        target: f64,
    },

    #[error("inner model solver stalled after {sweeps} sweeps (prox residual {residual:e})")]
    ModelStall { sweeps: usize, residual: f64 },

    #[error("non-finite {quantity} at iteration {k}")]
    NonFinite { k: usize, quantity: &'static str },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid problem: {0}")]
    Problem(String),

    #[error("malformed trace: {0}")]
    Parse(String),

    #[error("convergence order not estimable: {0}")]
    NotEstimable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
