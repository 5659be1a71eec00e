use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("curvature vector {kappa:?} is outside the cone Γ_{k}^+")]
    ConeViolation { kappa: Vec<f64>, k: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("contact angle {0} is outside (0, π/2]")]
    UnsupportedAngle(f64),

    #[error("surface is not star-shaped at node {node} (support function {support:e})")]
    NotStarShaped { node: usize, support: f64 },

    #[error("field is not axisymmetric (azimuthal spread {spread:e})")]
    NotAxisymmetric { spread: f64 },

    #[error("numeric failure at node {node:?}: {reason}")]
    NumericFailure { node: Option<usize>, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn numeric(node: Option<usize>, reason: impl Into<String>) -> Self {
        Error::NumericFailure {
            node,
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
