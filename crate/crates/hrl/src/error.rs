use thiserror::Error;

/// Errors shared by all verification modules.
#[derive(Debug, Error)]
pub enum HrlError {
    /// A parameter fell outside the admissible range (N >= 5, 0 < mu < N-4, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Node doubling changed the integral by more than the allowed budget.
    #[error("quadrature did not converge: |I(2n) - I(n)| = {delta:.3e} exceeds {budget:.3e}")]
    NonConvergence { delta: f64, budget: f64 },

    /// The integrand keeps growing at the upper truncation radius.
    #[error("integrand diverges near r_max = {r_max:.3e}")]
    Divergence { r_max: f64 },

    /// Discrete operator assembly failed (typically a non-positive mass matrix).
    #[error("assembly error: {0}")]
    Assembly(String),

    /// A sampled direction was annihilated by orthogonalization.
    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HrlError>;
