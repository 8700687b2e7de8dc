//! Sharp weighted Hardy–Rellich constants, their extremal profiles and numerical checks.
//!
//! The radial problem on `R^n` is reduced to a one-dimensional problem on the line via
//! `r = e^{-s}`; the modules follow that reduction.

pub mod closed_forms;
pub mod emden_fowler;
pub mod error;
pub mod numerics;
pub mod params;
pub mod residuals;
pub mod variational;

pub use error::{HrlError, Result};
pub use params::{ConstantReport, ProblemParams};
