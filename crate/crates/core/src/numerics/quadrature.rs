//! Adaptive Gauss-Kronrod (G7/K15) quadrature on intervals, half-lines and the line.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, HrlError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes, then the center.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and limits for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Interior split point used when integrating over (0, inf).
    pub halfline_split: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
            halfline_split: 1.0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(invalid("abs_tol", "must be positive"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(invalid("rel_tol", "must be positive"));
        }
        if self.max_subdivisions < 10 {
            return Err(invalid("max_subdivisions", "must be at least 10"));
        }
        if !(self.halfline_split > 0.0) || !self.halfline_split.is_finite() {
            return Err(invalid("halfline_split", "must be positive and finite"));
        }
        Ok(())
    }

    /// Same config with tolerances scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            ..*self
        }
    }
}

/// How an integrand on the real line behaves at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    /// Vanishes outside `[a, b]`.
    Compact { a: f64, b: f64 },
    /// Gaussian-type decay around `center` on the scale `width`; truncated at 12 widths.
    Gaussian { center: f64, width: f64 },
    /// Exponential (or faster) decay at both ends; the tails are mapped onto finite intervals.
    Exponential,
}

/// Value and error estimate of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One G7/K15 panel on `[a, b]`; returns (kronrod value, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let res_k_scaled = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (res_k_scaled, err)
}

/// Adaptive integral over the finite interval `[a, b]`.
pub fn integrate_interval<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    integrate_breakpoints(f, &[a, b], cfg)
}

/// Adaptive integral over `[p_0, p_last]` with the given interior breakpoints.
pub fn integrate_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    if points.len() < 2 {
        return Err(invalid("points", "need at least two breakpoints"));
    }
    let mut heap = BinaryHeap::new();
    let mut frozen_error = 0.0;
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in points.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let (v, e) = gk15(&f, w[0], w[1]);
        total += v;
        total_err += e;
        heap.push(Piece {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    let mut subdivisions = heap.len();
    loop {
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if !total.is_finite() {
            return Err(HrlError::QuadratureFailed {
                subdivisions,
                estimate: total,
                error: total_err,
            });
        }
        if total_err <= tol {
            return Ok(Integral {
                value: total,
                error: total_err,
                subdivisions,
            });
        }
        let Some(worst) = heap.pop() else {
            // Only unsplittable pieces are left.
            return Err(HrlError::QuadratureFailed {
                subdivisions,
                estimate: total,
                error: total_err,
            });
        };
        if subdivisions >= cfg.max_subdivisions {
            return Err(HrlError::QuadratureFailed {
                subdivisions,
                estimate: total,
                error: total_err,
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        let width = (worst.b - worst.a).abs();
        let scale = worst.a.abs().max(worst.b.abs()).max(f64::MIN_POSITIVE);
        if width <= 1e3 * f64::EPSILON * scale {
            // too narrow to split further; its value stays in the total
            frozen_error += worst.error;
            continue;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        // guard against drift of the running sums
        if total_err < 0.0 {
            total_err = heap.iter().map(|p| p.error).sum::<f64>() + e1 + e2 + frozen_error;
        }
        heap.push(Piece {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        subdivisions += 1;
    }
}

/// Integral of `f` over `[a, inf)`, using `x = a + (1 - t)/t` on `t in (0, 1]`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    let g = |t: f64| {
        let x = a + (1.0 - t) / t;
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v / (t * t)
        }
    };
    integrate_interval(g, 0.0, 1.0, cfg)
}

/// Integral of `f` over `(-inf, b]`.
pub fn integrate_from_neg_infinity<F: Fn(f64) -> f64>(
    f: F,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    integrate_to_infinity(|x| f(-x), -b, cfg)
}

/// Integral of `f` over the real line, using the decay class to pick the scheme.
pub fn integrate_line<F: Fn(f64) -> f64>(
    f: F,
    decay: Decay,
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    match decay {
        Decay::Compact { a, b } => integrate_interval(f, a, b, cfg),
        Decay::Gaussian { center, width } => {
            let w = 12.0 * width.abs();
            integrate_breakpoints(f, &[center - w, center, center + w], cfg)
        }
        Decay::Exponential => {
            let half = cfg.scaled(0.5);
            let left = integrate_from_neg_infinity(&f, 0.0, &half)?;
            let right = integrate_to_infinity(&f, 0.0, &half)?;
            Ok(Integral {
                value: left.value + right.value,
                error: left.error + right.error,
                subdivisions: left.subdivisions + right.subdivisions,
            })
        }
    }
}

/// Integral of `f` over `(0, inf)` through `r = e^{-s}`; suited to power-law ends.
pub fn integrate_halfline<F: Fn(f64) -> f64>(f: F, cfg: &QuadratureConfig) -> Result<Integral> {
    let s0 = -cfg.halfline_split.ln();
    let g = |s: f64| {
        let r = (-(s + s0)).exp();
        if r == 0.0 || !r.is_finite() {
            return 0.0;
        }
        let v = f(r);
        if v == 0.0 {
            0.0
        } else {
            v * r
        }
    };
    integrate_line(g, Decay::Exponential, cfg)
}
