//! Uniform symmetric grids on `[-L, L]`, sampled functions and finite differences.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, HrlError, Result};

/// Uniform grid with `n` points on `[-l, l]`; `n` is odd so that `0` is a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub l: f64,
    pub n: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self { l: 30.0, n: 4097 }
    }
}

impl Grid {
    pub fn new(l: f64, n: usize) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(invalid("grid.l", "half-width must be positive and finite"));
        }
        if n < 3 || n % 2 == 0 {
            return Err(invalid(
                "grid.n",
                format!("point count must be odd and >= 3, got {n}"),
            ));
        }
        Ok(Self { l, n })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.l / (self.n as f64 - 1.0)
    }

    pub fn point(&self, i: usize) -> f64 {
        -self.l + i as f64 * self.h()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Index of the node `s = 0`.
    pub fn center(&self) -> usize {
        self.n / 2
    }

    /// Trapezoid sum; exact `h * sum` when the end values vanish.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let n = values.len();
        if n == 0 {
            return 0.0;
        }
        let inner: f64 = values.iter().sum();
        self.h() * (inner - 0.5 * (values[0] + values[n - 1]))
    }
}

/// Samples of a function on a [`Grid`].
///
/// Functions built with [`GridFunction::new`] or [`GridFunction::sample`] vanish at the two
/// outermost nodes. Derivative tables returned by [`fd_derivative`] carry no such guarantee.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(invalid(
                "values",
                format!("expected {} samples, got {}", grid.n, values.len()),
            ));
        }
        if values[0] != 0.0 || values[grid.n - 1] != 0.0 {
            return Err(invalid("values", "boundary samples must be exactly zero"));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at the nodes and clamps the two end values to zero.
    pub fn sample<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Self {
        let mut values: Vec<f64> = grid.points().into_iter().map(f).collect();
        values[0] = 0.0;
        let last = grid.n - 1;
        values[last] = 0.0;
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n],
        }
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Index of the largest |value|.
    pub fn argmax_abs(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if v.abs() > self.values[best].abs() {
                best = i;
            }
        }
        best
    }

    /// Integer shift: `out[i] = self[i + shift]`, with zeros filling in.
    pub fn shifted(&self, shift: isize) -> Self {
        let n = self.grid.n as isize;
        let mut out = vec![0.0; self.grid.n];
        for (i, o) in out.iter_mut().enumerate() {
            let j = i as isize + shift;
            if j > 0 && j < n - 1 {
                *o = self.values[j as usize];
            }
        }
        Self {
            grid: self.grid,
            values: out,
        }
    }
}

const INTERIOR: [&[f64]; 4] = [
    &[-0.5, 0.0, 0.5],
    &[1.0, -2.0, 1.0],
    &[-0.5, 1.0, 0.0, -1.0, 0.5],
    &[1.0, -4.0, 6.0, -4.0, 1.0],
];

// One-sided second-order closures, left end; the right end mirrors them.
const LEFT: [&[f64]; 4] = [
    &[-1.5, 2.0, -0.5],
    &[2.0, -5.0, 4.0, -1.0],
    &[-2.5, 9.0, -12.0, 7.0, -1.5],
    &[3.0, -14.0, 26.0, -24.0, 11.0, -2.0],
];

/// Second-order finite-difference derivative of order 1..=4.
///
/// Central stencils in the interior and one-sided second-order closures near the ends.
pub fn fd_derivative(gf: &GridFunction, order: usize) -> Result<GridFunction> {
    if order == 0 {
        return Ok(gf.clone());
    }
    if order > 4 {
        return Err(HrlError::OrderTooHigh {
            requested: order,
            available: 4,
        });
    }
    let n = gf.values.len();
    let closure = LEFT[order - 1];
    if n < closure.len() + 1 {
        return Err(invalid(
            "grid.n",
            format!("too few points for order {order}"),
        ));
    }
    let h = gf.grid.h();
    let scale = h.powi(order as i32);
    let stencil = INTERIOR[order - 1];
    let half = stencil.len() / 2;
    let v = &gf.values;
    let mut out = vec![0.0; n];
    for i in 0..n {
        let acc = if i >= half && i + half < n {
            stencil
                .iter()
                .enumerate()
                .map(|(k, w)| w * v[i + k - half])
                .sum::<f64>()
        } else {
            one_sided(v, i, closure, order, i >= half)
        };
        out[i] = acc / scale;
    }
    Ok(GridFunction {
        grid: gf.grid,
        values: out,
    })
}

// One-sided stencil anchored at row `i`, pointing inwards.
fn one_sided(v: &[f64], i: usize, closure: &[f64], order: usize, right: bool) -> f64 {
    let sign = if right && order % 2 == 1 { -1.0 } else { 1.0 };
    closure
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let idx = if right { i - k } else { i + k };
            sign * w * v[idx]
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(30.0, 4097).is_ok());
        assert!(Grid::new(30.0, 4096).is_err());
        assert!(Grid::new(-1.0, 11).is_err());
        let g = Grid::new(1.0, 5).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.point(g.center()), 0.0);
    }

    #[test]
    fn boundary_contract() {
        let g = Grid::new(1.0, 5).unwrap();
        assert!(GridFunction::new(g, vec![0.0, 1.0, 2.0, 1.0, 0.0]).is_ok());
        assert!(GridFunction::new(g, vec![1.0, 1.0, 2.0, 1.0, 0.0]).is_err());
        let s = GridFunction::sample(g, |x| x + 5.0);
        assert_eq!(s.values[0], 0.0);
        assert_eq!(s.values[4], 0.0);
    }

    fn max_err(grid: Grid, f: impl Fn(f64) -> f64, d: impl Fn(f64) -> f64, order: usize) -> f64 {
        let gf = GridFunction {
            grid,
            values: grid.points().into_iter().map(&f).collect(),
        };
        let out = fd_derivative(&gf, order).unwrap();
        grid.points()
            .iter()
            .zip(out.values.iter())
            .map(|(x, v)| (v - d(*x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn second_derivative_of_quadratic() {
        let grid = Grid::new(2.0, 41).unwrap();
        let e = max_err(grid, |x| x * x, |_| 2.0, 2);
        assert!(e < 1e-8, "{e}");
    }

    #[test]
    fn sine_converges_at_second_order() {
        for order in 1..=4 {
            let d = move |x: f64| match order {
                1 => x.cos(),
                2 => -x.sin(),
                3 => -x.cos(),
                _ => x.sin(),
            };
            let e1 = max_err(Grid::new(3.0, 401).unwrap(), f64::sin, d, order);
            let e2 = max_err(Grid::new(3.0, 801).unwrap(), f64::sin, d, order);
            let ratio = e1 / e2;
            assert!((3.5..=4.5).contains(&ratio), "order {order}: ratio {ratio}");
            let h = 6.0 / 400.0;
            let c = e1 / (h * h);
            assert!(c < 50.0, "order {order}: constant {c}");
        }
    }

    #[test]
    fn fourth_derivative_of_gaussian() {
        let f = |x: f64| (-x * x).exp();
        let d4 = |x: f64| (16.0 * x.powi(4) - 48.0 * x * x + 12.0) * (-x * x).exp();
        let e1 = max_err(Grid::new(6.0, 601).unwrap(), f, d4, 4);
        let e2 = max_err(Grid::new(6.0, 1201).unwrap(), f, d4, 4);
        assert!(e1 < 0.05 && (3.5..=4.5).contains(&(e1 / e2)), "{e1} {e2}");
    }

    #[test]
    fn order_too_high() {
        let g = GridFunction::zeros(Grid::new(1.0, 11).unwrap());
        assert!(matches!(
            fd_derivative(&g, 5),
            Err(HrlError::OrderTooHigh { .. })
        ));
    }

    #[test]
    fn trapezoid_on_grid() {
        let grid = Grid::new(10.0, 2001).unwrap();
        let v: Vec<f64> = grid.points().iter().map(|x| (-x * x).exp()).collect();
        assert!((grid.integrate(&v) - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }
}
