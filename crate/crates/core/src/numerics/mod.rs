//! Quadrature, grids, finite differences and Taylor jets.

pub mod grid;
pub mod jet;
pub mod quadrature;

pub use grid::{fd_derivative, Grid, GridFunction};
pub use jet::{Jet, JET_LEN};
pub use quadrature::{
    integrate_breakpoints, integrate_halfline, integrate_interval, integrate_line,
    integrate_to_infinity, Decay, Integral, QuadratureConfig,
};

/// `|t|^{p-2} t`, continuously extended by `0` at `t = 0`.
pub fn spow(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(p - 1.0).copysign(t)
    }
}

/// Smoothed `(t^2 + delta^2)^{(p-2)/2} t`; used only by the minimizer.
pub fn spow_smooth(t: f64, p: f64, delta: f64) -> f64 {
    (t * t + delta * delta).powf(0.5 * (p - 2.0)) * t
}
