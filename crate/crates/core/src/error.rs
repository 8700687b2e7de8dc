//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HrlError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    QuadratureFailed {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },

    #[error("derivative order {requested} exceeds available order {available}")]
    OrderTooHigh { requested: usize, available: usize },

    #[error("denominator vanishes")]
    ZeroDenominator,

    #[error("minimization diverged: {0}")]
    Diverged(String),
}

pub type Result<T> = std::result::Result<T, HrlError>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> HrlError {
    HrlError::InvalidParam {
        field,
        reason: reason.into(),
    }
}
