use thiserror::Error;

/// Errors raised by geometry, energy, flow and diagnostics routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point violates the ambient constraint (residual {residual:.3e})")]
    InvalidPoint { residual: f64 },

    #[error("retraction failed: {0}")]
    RetractionFailure(String),

    #[error("left the profile domain: z = {z} < t_min = {t_min}")]
    DomainExit { z: f64, t_min: f64 },

    #[error("degenerate curve: node {node} has speed {speed:.3e}")]
    DegenerateCurve { node: usize, speed: f64 },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("curvature vanishes at {nodes} node(s); p > 2 requires |k| > 0")]
    VanishingCurvature { nodes: usize },

    #[error("step failed: {0}")]
    StepFailure(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid segment: {0}")]
    InvalidSegment(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed snapshot: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
