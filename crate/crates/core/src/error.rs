use thiserror::Error;

/// Errors produced by the simulation, estimation and evaluation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("covariance matrix is not positive definite (most negative eigenvalue estimate {min_eigenvalue:.3e})")]
    NonPositiveDefinite { min_eigenvalue: f64 },

    #[error("constant unavailable: {0}")]
    ConstantUnavailable(String),

    /// The interval schedule ended before successive estimates settled.
    /// `trajectory` holds `(T, value, stderr)` for every schedule point visited.
    #[error("schedule exhausted after {} points without convergence", trajectory.len())]
    ScheduleExhausted { trajectory: Vec<(f64, f64, f64)> },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("insufficient events: {hits} hits, at least {required} required")]
    InsufficientEvents { hits: u64, required: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::Precondition(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
