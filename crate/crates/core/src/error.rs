use thiserror::Error;

use crate::model::ValidationReport;

/// Errors raised by the analysis pipeline.
///
/// Validation failures of well-formed data are usually carried in a
/// [`ValidationReport`]; they only become an [`Error::Invalid`] when an
/// operation needs validated input to proceed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("state outside the positive orthant: x[{index}] = {value}")]
    Domain { index: usize, value: f64 },

    #[error("system failed validation: {}", .0.summary())]
    Invalid(ValidationReport),

    #[error("initial state is not in the characteristic set (margin {margin:e})")]
    NotCharacteristic { margin: f64 },

    #[error("cone point construction failed: {0}")]
    ConePoint(String),

    #[error("characteristic seed has non-positive margin {margin:e} (safety {safety})")]
    SeedMargin { margin: f64, safety: f64 },

    #[error("Newton refinement stalled at residual {residual:e} after {iterations} iterations")]
    NewtonStalled { residual: f64, iterations: usize },

    #[error("singular Jacobian during Newton refinement")]
    SingularJacobian,

    #[error("malformed network description: {0}")]
    Malformed(String),

    #[error("invalid sweep: {0}")]
    Sweep(String),

    #[error("invalid options: {0}")]
    Options(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
