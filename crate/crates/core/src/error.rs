use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),

    #[error("diffusion matrix is singular at the sampled point (ellipticity violated)")]
    SingularDiffusion,

    #[error("resolution {coarse} does not divide {fine}")]
    NotADivisor { fine: usize, coarse: usize },

    #[error("time {0} lies outside the current step")]
    OutsideStep(f64),

    #[error("non-finite state at step {step} of path {path}")]
    NonFinite { path: u64, step: usize },

    #[error("query ({t}, {x}) lies outside the solution grid")]
    OutOfHull { t: f64, x: f64 },

    #[error("PDE solution is not finite")]
    NonFiniteSolution,

    #[error("reference did not converge: error estimate {estimate:e} above target {target:e}")]
    NoConvergence { estimate: f64, target: f64 },

    #[error("{excluded} of {paths} paths left the PDE grid (limit is one in a thousand)")]
    ExcessiveExclusion { excluded: u64, paths: u64 },

    #[error("only {usable} usable rate points after noise-floor exclusion (need at least 3)")]
    InsufficientPoints { usable: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
