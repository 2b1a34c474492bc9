use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid scenario description (bad counts, negative properties, unknown keys).
    #[error("config error: {0}")]
    Config(String),

    /// Degenerate or inconsistent geometry (empty cut, all nodes on one side, ...).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Linear solver breakdown or unacceptable post-solve residual.
    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// Non-convergence of a nonlinear iteration (local return mapping or global Newton).
    #[error("nonlinear solve failed: {0}")]
    Nonlinear(String),

    /// Invalid time stepping request (nonpositive step, unreachable report time).
    #[error("scheduling error: {0}")]
    Scheduling(String),

    /// A fracture state combination the local solver does not support.
    #[error("unsupported state: {0}")]
    UnsupportedState(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
