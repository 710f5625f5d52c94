use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Variants are grouped so the CLI can map them onto exit codes:
/// [`Error::Domain`] and [`Error::Config`] are caller mistakes, everything
/// else is a numerical failure, except [`Error::Io`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("grid mismatch: expected {expected} points, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("degenerate system: {0}")]
    Degenerate(String),

    #[error("newton iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Box<Vec<f64>>,
    },

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("gauge construction failed: {0}")]
    Gauge(String),

    #[error("time integration failed at t = {time:.4}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("no admissible profile: {0}")]
    NoProfile(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("expression error: {0}")]
    Expr(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error stems from caller input rather than numerics or I/O.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Config(_) | Error::GridMismatch { .. } | Error::Expr(_))
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Csv(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
