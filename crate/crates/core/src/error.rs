use thiserror::Error;

/// Errors raised by method construction and the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("order {0} is outside the supported range 1..=5")]
    UnsupportedOrder(usize),

    #[error("damping coefficient {0} is outside (0, 1]")]
    InvalidBeta(f64),

    #[error("momentum number {0} is outside (0, 5]")]
    InvalidMomentum(f64),

    #[error("aggregated momentum: {0}")]
    InvalidAggregate(String),

    #[error("{0} has no linear multistep (A, B) form")]
    NoLinearForm(&'static str),

    #[error("closed-form locus not available for {family} order {order}")]
    NoClosedForm { family: &'static str, order: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("step size must be finite and non-zero, got {0}")]
    InvalidStep(f64),

    #[error("polynomial is degenerate (all coefficients vanish)")]
    DegeneratePolynomial,

    #[error("root finder did not converge after {iterations} iterations (worst residual {worst_residual:e})")]
    RootsNotConverged { iterations: usize, worst_residual: f64, residuals: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} outside schedule of length {len}")]
    ScheduleIndex { index: usize, len: usize },

    #[error("alpha {0} outside the admissible range")]
    InvalidAlpha(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
