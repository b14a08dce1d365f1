use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("input domain error: {0}")]
    InputDomain(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// `s(t-1) != d^2-1`: the measurement cannot be informationally complete.
    #[error("not informationally complete: s(t-1) = {s}*({t}-1) != d^2-1 = {}", d * d - 1)]
    Completeness { d: usize, s: usize, t: usize },

    /// The construction parameter leaves the positivity window.
    #[error("r = {r} outside the positivity range [{lo}, {hi}]")]
    Positivity { r: f64, lo: f64, hi: f64 },

    #[error("construction error: {0}")]
    Construction(String),

    /// A dense representation would exceed the dimension limit.
    #[error("dense dimension {dim} exceeds limit {limit}; use the isotropic fast path")]
    SizeInfeasible { dim: usize, limit: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal {residual:.3e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    /// The violation indicator flips more than once across the p grid.
    #[error("violation indicator is not monotone in p on the grid: {}", format_grid(.grid))]
    NonMonotone { grid: Vec<(f64, bool)> },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_grid(grid: &[(f64, bool)]) -> String {
    grid.iter()
        .map(|(p, v)| format!("{p:.2}:{}", if *v { 1 } else { 0 }))
        .collect::<Vec<_>>()
        .join(" ")
}

pub type Result<T> = std::result::Result<T, Error>;
