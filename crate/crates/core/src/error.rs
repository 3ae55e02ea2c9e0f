use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("selector `{0}` matched no nodes")]
    EmptySelector(String),

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("stiffness system is singular or not positive definite: {0}")]
    Singular(String),

    #[error("eigensolver did not converge after {iterations} Lanczos steps (relative residual {residual:.3e})")]
    EigenNotConverged { iterations: usize, residual: f64 },

    /// The stress state has no positive load factor (nothing is in compression).
    #[error("no buckling: no positive load factor exists for this stress state (largest Ritz value {largest_ritz:.3e})")]
    NoBuckling { largest_ritz: f64 },

    #[error("degenerate buckling denominator |vᵀKσv| = {value:.3e}")]
    DegenerateDenominator { value: f64 },

    #[error("target volume fraction {target:.4} is unreachable: non-design elements alone occupy {mask_volume:.4}")]
    UnreachableTarget { target: f64, mask_volume: f64 },

    #[error("constraints violated on the full design domain (g1 = {g1:.4}, g2 = {g2:.4})")]
    InfeasibleStart { g1: f64, g2: f64 },

    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short stable identifier used in machine-parseable CLI output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::EmptySelector(_) => "empty_selector",
            Error::NotConverged { .. } => "not_converged",
            Error::Singular(_) => "singular",
            Error::EigenNotConverged { .. } => "eigen_not_converged",
            Error::NoBuckling { .. } => "no_buckling",
            Error::DegenerateDenominator { .. } => "degenerate_denominator",
            Error::UnreachableTarget { .. } => "unreachable_target",
            Error::InfeasibleStart { .. } => "infeasible_start",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
