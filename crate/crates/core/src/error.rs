use thiserror::Error;

/// Errors raised by the mechanics and quantization routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: String },

    #[error("metric is not symmetric or does not match its declared signature at {at:?}")]
    InvalidMetric { at: Vec<f64> },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("finite-difference derivative is not finite at {at:?}")]
    DerivativeFailure { at: Vec<f64> },

    #[error("probe is degenerate: |L| = {value:e} is below tolerance {tol:e}")]
    DegenerateProbe { value: f64, tol: f64 },

    #[error("check not applicable: {0}")]
    NotApplicable(String),

    #[error("singular Hessian and no gauge closure supplied (dim {dim})")]
    UnderdeterminedSystem { dim: usize },

    #[error("integration diverged at lambda = {lambda}")]
    IntegrationDiverged { lambda: f64 },

    #[error("parametrization rate vanishes or changes sign at lambda = {lambda}")]
    GaugeDegenerate { lambda: f64 },

    #[error("space-like segment at lambda = {lambda} (g(v,v) = {norm:e})")]
    SpaceLikeSegment { lambda: f64, norm: f64 },

    #[error("constraint violated at lambda = {lambda}: |H| = {residual:e} exceeds {tol:e}")]
    ConstraintViolation { lambda: f64, residual: f64, tol: f64 },

    #[error("supplied quantity is not an integral of the flow: {0}")]
    NotAnIntegral(String),

    #[error("superluminal state: gamma radicand {radicand:e} is not positive")]
    SuperluminalState { radicand: f64 },

    #[error("off-shell state: gamma radicand {radicand:e} is not positive")]
    OffShellState { radicand: f64 },

    #[error("window [{start}, {end}] lies outside the grid [{grid_start}, {grid_end}]")]
    WindowOutOfRange {
        start: f64,
        end: f64,
        grid_start: f64,
        grid_end: f64,
    },

    #[error("operator expects a {expected} wave function")]
    KindMismatch { expected: &'static str },

    #[error("wave function vanishes at sample {index}")]
    DivisionDegenerate { index: usize },

    #[error("grid step {step:e} under-resolves the phase; need step <= {max_step:e}")]
    UnderResolved { step: f64, max_step: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
