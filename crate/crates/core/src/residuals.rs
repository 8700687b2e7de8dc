//! Euler–Lagrange residuals of the closed-form extremals and related algebraic checks.

use serde::{Deserialize, Serialize};

use crate::closed_forms::{hamiltonian, ExtremalF, ExtremalG, PowerIntegralProfile, U1};
use crate::emden_fowler::{Bump, EmdenFowler, LineFunction, RadialProfile};
use crate::error::{invalid, Result};
use crate::numerics::{
    fd_derivative, integrate_interval, integrate_line, spow, Decay, GridFunction, Jet,
    QuadratureConfig,
};
use crate::params::ProblemParams;
use std::sync::Arc;

/// Pointwise residuals with absolute and relative maxima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_abs: f64,
    pub max_rel: f64,
    pub sample_points: Vec<f64>,
    pub residuals: Vec<f64>,
    pub relative: Vec<f64>,
}

impl ResidualReport {
    /// Builds a report from `(point, residual, scale)` triples; `relative = |res| / scale`.
    pub fn from_triples(rows: impl IntoIterator<Item = (f64, f64, f64)>) -> Self {
        let mut out = Self {
            max_abs: 0.0,
            max_rel: 0.0,
            sample_points: Vec::new(),
            residuals: Vec::new(),
            relative: Vec::new(),
        };
        for (x, res, scale) in rows {
            let rel = if scale > 0.0 {
                res.abs() / scale
            } else {
                res.abs()
            };
            out.max_abs = out.max_abs.max(res.abs());
            out.max_rel = out.max_rel.max(rel);
            out.sample_points.push(x);
            out.residuals.push(res);
            out.relative.push(rel);
        }
        out
    }
}

/// Uniform samples on `[a, b]`.
pub fn line_samples(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Log-uniform samples on `[a, b]`.
pub fn log_samples(a: f64, b: f64, n: usize) -> Vec<f64> {
    line_samples(a.ln(), b.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// Default line samples: 2001 points on `[-25, 25]`.
pub fn default_line_samples() -> Vec<f64> {
    line_samples(-25.0, 25.0, 2001)
}

/// Default radial samples: 400 points log-uniform on `[1e-2, 1e2]`.
pub fn default_radial_samples() -> Vec<f64> {
    log_samples(1e-2, 1e2, 400)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FSystemReport {
    /// `f' - lambda f - |phi|^{p'-2} phi`
    pub first: ResidualReport,
    /// `-phi' - lambda phi - |f|^{q-2} f`
    pub second: ResidualReport,
    /// `H(F, Phi)`
    pub conservation: ResidualReport,
}

impl FSystemReport {
    pub fn system_max_abs(&self) -> f64 {
        self.first.max_abs.max(self.second.max_abs)
    }
}

/// Residuals of the first-order Hamiltonian system and of the conservation law along `(F, Phi)`.
pub fn residual_f_system(f: &ExtremalF, samples: &[f64]) -> FSystemReport {
    let (p, q, l) = (f.p, f.q, f.lambda);
    let pc = p / (p - 1.0);
    let mut first = Vec::new();
    let mut second = Vec::new();
    let mut cons = Vec::new();
    for &s in samples {
        let d = f.derivatives(s);
        let phi = f.phi(s);
        let t1 = [d[1], l * d[0], spow(phi, pc)];
        let r1 = t1[0] - t1[1] - t1[2];
        first.push((s, r1, t1.iter().fold(0.0_f64, |m, v| m.max(v.abs()))));
        let dphi = f.phi_prime(s);
        let t2 = [dphi, l * phi, spow(d[0], q)];
        let r2 = -t2[0] - t2[1] - t2[2];
        second.push((s, r2, t2.iter().fold(0.0_f64, |m, v| m.max(v.abs()))));
        let h = hamiltonian(d[0], phi, l, p, q);
        let scale = (l * d[0] * phi).abs();
        cons.push((s, h, scale));
    }
    FSystemReport {
        first: ResidualReport::from_triples(first),
        second: ResidualReport::from_triples(second),
        conservation: ResidualReport::from_triples(cons),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GEquationReport {
    /// `(|L_+G|^{p-2} L_+G)' + lambda |L_+G|^{p-2} L_+G - |B_+G|^{q-2} B_+G`
    pub equation: ResidualReport,
    /// `G' + HG - sign(H) F`
    pub b_identity: ResidualReport,
}

/// Residual of the second-order Euler–Lagrange equation satisfied by `G`.
pub fn residual_g_equation(g: &ExtremalG, samples: &[f64]) -> Result<GEquationReport> {
    let (p, q, a, gamma, h) = (g.p, g.q, g.a, g.gamma, g.h);
    let c = h * h + 2.0 * a * h - gamma;
    if c.abs() > 1e-10 * (1.0 + gamma.abs() + h * h) {
        return Err(invalid("h", "constraint H^2 + 2AH - gamma = 0 violated"));
    }
    let lambda = gamma / h;
    let mut eq = Vec::new();
    let mut bid = Vec::new();
    for &s in samples {
        let mut d = [0.0; 4];
        for (i, v) in d.iter_mut().enumerate() {
            *v = g.eval_derivative(s, i)?;
        }
        let w = -(d[2] - 2.0 * a * d[1] - gamma * d[0]);
        let dw = -(d[3] - 2.0 * a * d[2] - gamma * d[1]);
        let bg = d[1] + h * d[0];
        let sw = spow(w, p);
        let dsw = if w == 0.0 {
            0.0
        } else {
            (p - 1.0) * w.abs().powf(p - 2.0) * dw
        };
        let terms = [dsw, lambda * sw, spow(bg, q)];
        let res = terms[0] + terms[1] - terms[2];
        eq.push((s, res, terms.iter().fold(0.0_f64, |m, v| m.max(v.abs()))));
        // the H < 0 representation carries the opposite sign
        let fv = h.signum() * g.f.eval(s);
        bid.push((s, bg - fv, fv.abs().max(bg.abs())));
    }
    Ok(GEquationReport {
        equation: ResidualReport::from_triples(eq),
        b_identity: ResidualReport::from_triples(bid),
    })
}

/// How the outer derivative of a divergence-form residual is taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OuterDerivative {
    Analytic,
    /// Central difference with relative step `h` (step `h r`).
    Difference {
        h: f64,
    },
}

/// Residual of `-div(|x|^alpha |grad U|^{p-2} grad U) = |x|^{-n+q(n-p+alpha)/p} |U|^{q-2} U`.
pub fn residual_radial_p_laplace(
    u: &U1,
    samples: &[f64],
    outer: OuterDerivative,
) -> ResidualReport {
    let params = u.params;
    let (n, p, alpha, q) = (params.nf(), params.p, params.alpha, u.q);
    let w = n - 1.0 + alpha;
    let flux = |r: f64| r.powf(w) * spow(u.derivatives(r)[1], p);
    let rhs_exp = -n + q * (n - p + alpha) / p;
    let rows = samples.iter().map(|&r| {
        let d = u.derivatives(r);
        let dflux = match outer {
            OuterDerivative::Analytic => {
                w * r.powf(w - 1.0) * spow(d[1], p)
                    + r.powf(w) * (p - 1.0) * d[1].abs().powf(p - 2.0) * d[2]
            }
            OuterDerivative::Difference { h } => {
                let dr = h * r;
                (flux(r + dr) - flux(r - dr)) / (2.0 * dr)
            }
        };
        let lhs = -r.powf(1.0 - n) * dflux;
        let rhs = r.powf(rhs_exp) * spow(d[0], q);
        (r, lhs - rhs, lhs.abs().max(rhs.abs()))
    });
    ResidualReport::from_triples(rows.collect::<Vec<_>>())
}

/// Weak or strong form of the fourth-order radial equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiharmonicMode {
    Weak,
    Strong,
}

fn laplacian_jet(u_prime: Jet, r: f64, n: f64) -> Jet {
    u_prime.derivative() + u_prime.scale(n - 1.0) * Jet::variable(r).recip()
}

/// Radial test functions `bump(-ln r)` centred at ten log-radii in `[-2, 2]`.
pub fn radial_test_bank() -> Vec<EmdenFowler> {
    line_samples(-2.0, 2.0, 10)
        .into_iter()
        .map(|c| EmdenFowler {
            g: Arc::new(Bump {
                center: c,
                half_width: 1.0,
                amp: 1.0,
            }),
            e: 0.0,
        })
        .collect()
}

/// Residual of `Delta(|x|^alpha |Delta U|^{p-2} Delta U) + div(|x|^{-beta_{1,q}} |grad U|^{q-2} grad U) = 0`.
///
/// Weak mode tests against [`radial_test_bank`] and reports one row per test function, at its
/// centre radius. Strong mode evaluates the equation pointwise through jets.
pub fn residual_radial_biharmonic(
    u: &PowerIntegralProfile,
    params: &ProblemParams,
    q: f64,
    mode: BiharmonicMode,
    samples: &[f64],
    cfg: &QuadratureConfig,
) -> Result<ResidualReport> {
    let n = params.nf();
    let p = params.p;
    let alpha = params.alpha;
    let beta = params.with_q(q)?.beta_exponent(1)?;
    match mode {
        BiharmonicMode::Weak => {
            let mut rows = Vec::new();
            for phi in radial_test_bank() {
                let (a, b) = match phi.g.decay() {
                    Decay::Compact { a, b } => (a, b),
                    _ => unreachable!(),
                };
                let term = |which: usize| {
                    integrate_interval(
                        |s: f64| {
                            let r = (-s).exp();
                            let up = u.derivative_jet(r);
                            let lap = laplacian_jet(up, r, n).value();
                            let dphi = phi.derivatives(r);
                            let lap_phi = dphi[2] + (n - 1.0) * dphi[1] / r;
                            // dr = r ds
                            let v = if which == 0 {
                                r.powf(alpha) * spow(lap, p) * lap_phi
                            } else {
                                r.powf(-beta) * spow(up.value(), q) * dphi[1]
                            };
                            r.powf(n) * v
                        },
                        a,
                        b,
                        cfg,
                    )
                };
                let t1 = term(0)?.value;
                let t2 = term(1)?.value;
                let centre = (-(0.5 * (a + b))).exp();
                rows.push((centre, t1 - t2, t1.abs().max(t2.abs())));
            }
            Ok(ResidualReport::from_triples(rows))
        }
        BiharmonicMode::Strong => {
            let rows = samples.iter().map(|&r| {
                let up = u.derivative_jet(r);
                let lap = laplacian_jet(up, r, n);
                let x = Jet::variable(r);
                let w = x.ln().scale(alpha).exp() * lap.spow(p);
                let v = x.ln().scale(-beta).exp() * up.spow(q);
                let wd = w.derivatives();
                let vd = v.derivatives();
                let t1 = wd[2] + (n - 1.0) * wd[1] / r;
                let t2 = vd[1] + (n - 1.0) * vd[0] / r;
                (r, t1 + t2, t1.abs().max(t2.abs()))
            });
            Ok(ResidualReport::from_triples(rows.collect::<Vec<_>>()))
        }
    }
}

/// `(|Delta U~|^{p-2} Delta U~)' + |U~'|^{p*-2} U~'` for the `n = 2p` profile.
pub fn utilde_phi_identity(n: u32, samples: &[f64]) -> Result<ResidualReport> {
    let u = crate::closed_forms::UTilde::new(n)?;
    let nf = n as f64;
    let p = u.p();
    let pstar = nf * p / (nf - p);
    let rows = samples.iter().map(|&r| {
        let x = Jet::variable(r);
        let up = x.scale(u.k) * x.powi(n).add_const(1.0).recip();
        let lap = laplacian_jet(up, r, nf);
        let t1 = lap.spow(p).derivatives()[1];
        let t2 = spow(up.value(), pstar);
        (r, t1 + t2, t1.abs().max(t2.abs()))
    });
    Ok(ResidualReport::from_triples(rows.collect::<Vec<_>>()))
}

/// Exponents of the equivalent Hénon–Lane–Emden system and the critical hyperbola.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HleReport {
    pub a: f64,
    pub b: f64,
    /// `(a + n)/p' + (b + n)/q - (n - 2)`
    pub hyperbola_residual: f64,
    /// `hyperbola_residual / max(1, n - 2)`
    pub hyperbola_relative: f64,
    pub a_ne_minus_n: bool,
    pub b_ne_minus_n: bool,
}

pub fn hle_system_check(params: &ProblemParams) -> Result<HleReport> {
    let q = params
        .q
        .ok_or_else(|| invalid("q", "exponent q is required"))?;
    let (n, p, alpha) = (params.nf(), params.p, params.alpha);
    let a = -alpha / (p - 1.0);
    let b = -params.beta_exponent(2)?;
    let pc = params.conjugate();
    let res = (a + n) / pc + (b + n) / q - (n - 2.0);
    let tol = params.zero_tolerance();
    Ok(HleReport {
        a,
        b,
        hyperbola_residual: res,
        hyperbola_relative: res.abs() / (n - 2.0).max(1.0),
        a_ne_minus_n: (a + n).abs() > tol,
        b_ne_minus_n: (b + n).abs() > tol,
    })
}

/// Residual of `L*(|Lg|^{p-2} Lg) = mu |g|^{q-2} g` on a grid, with `Lg = g'' - 2Ag' - gamma g`,
/// `L*w = w'' + 2Aw' - gamma w` and `mu` fitted by least squares.
///
/// This is the line form of the companion-function system for a grid minimizer. Returns the
/// report and the fitted `mu`. Rows within `margin` nodes of the ends are skipped.
pub fn grid_el_residual(
    g: &GridFunction,
    a: f64,
    gamma: f64,
    p: f64,
    q: f64,
    margin: usize,
) -> Result<(ResidualReport, f64)> {
    let d1 = fd_derivative(g, 1)?;
    let d2 = fd_derivative(g, 2)?;
    let lg: Vec<f64> = (0..g.values.len())
        .map(|i| d2.values[i] - 2.0 * a * d1.values[i] - gamma * g.values[i])
        .collect();
    let w = GridFunction {
        grid: g.grid,
        values: lg.iter().map(|v| spow(*v, p)).collect(),
    };
    let w1 = fd_derivative(&w, 1)?;
    let w2 = fd_derivative(&w, 2)?;
    let n = g.values.len();
    if 2 * margin + 1 >= n {
        return Err(invalid("margin", "margin leaves no interior rows"));
    }
    let idx: Vec<usize> = (margin..n - margin).collect();
    let lhs: Vec<f64> = idx
        .iter()
        .map(|&i| w2.values[i] + 2.0 * a * w1.values[i] - gamma * w.values[i])
        .collect();
    let rhs: Vec<f64> = idx.iter().map(|&i| spow(g.values[i], q)).collect();
    let num: f64 = lhs.iter().zip(&rhs).map(|(l, r)| l * r).sum();
    let den: f64 = rhs.iter().map(|r| r * r).sum();
    if den == 0.0 {
        return Err(crate::error::HrlError::ZeroDenominator);
    }
    let mu = num / den;
    let scale = lhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let rows = idx
        .iter()
        .zip(lhs.iter().zip(&rhs))
        .map(|(&i, (l, r))| (g.grid.point(i), l - mu * r, scale));
    Ok((ResidualReport::from_triples(rows.collect::<Vec<_>>()), mu))
}

/// Whether the three weighted integrals of Delta U, grad U and U are finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrabilityFlags {
    /// `int |x|^alpha |Delta U|^p dx < inf`
    pub laplacian: bool,
    /// `int |x|^{alpha-p} |grad U|^p dx < inf`
    pub gradient: bool,
    /// `int |x|^{alpha-2p} |U|^p dx < inf`
    pub value: bool,
}

/// Classifies a weighted integral `int r^{n-1+w} |f(r)|^p dr` at both ends by the decay of
/// its log-shell contributions. Shells of unit width in `ln r` at `|ln r| = 6, 8, ..., 20`;
/// a slope of `ln(shell)` above `-0.1` per unit counts as divergence.
pub fn shell_convergent<F: Fn(f64) -> f64>(f: F, n: f64, w: f64, p: f64) -> bool {
    // fixed Simpson rule: far tails carry round-off noise that stalls adaptive schemes
    let shell = |s0: f64| {
        let m = 64;
        let h = 1.0 / m as f64;
        (0..=m)
            .map(|i| {
                let s = s0 + i as f64 * h;
                let r = (-s).exp();
                let wt = if i == 0 || i == m {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                wt * r.powf(n + w) * f(r).abs().powf(p)
            })
            .sum::<f64>()
            * h
            / 3.0
    };
    for side in [1.0, -1.0] {
        let xs: Vec<f64> = (3..=10).map(|m| 2.0 * m as f64).collect();
        let vals: Vec<f64> = xs
            .iter()
            .map(|x| shell(side * x - if side < 0.0 { 1.0 } else { 0.0 }))
            .collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let peak = vals.iter().fold(0.0_f64, |m, v| m.max(*v));
        if peak == 0.0 {
            continue;
        }
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(&vals)
            .filter(|(_, v)| **v > 0.0)
            .map(|(x, v)| (*x, v.ln()))
            .collect();
        if pts.len() < vals.len() {
            // contributions vanish before the last shell
            continue;
        }
        let m = pts.len() as f64;
        let mx = pts.iter().map(|t| t.0).sum::<f64>() / m;
        let my = pts.iter().map(|t| t.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|t| (t.0 - mx) * (t.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|t| (t.0 - mx) * (t.0 - mx)).sum();
        if sxy / sxx > -0.1 {
            return false;
        }
    }
    true
}

pub fn integrability_flags(u: &dyn RadialProfile, params: &ProblemParams) -> IntegrabilityFlags {
    let n = params.nf();
    let (p, alpha) = (params.p, params.alpha);
    let nn = params.n;
    let lap = |r: f64| {
        let d = u.derivatives(r);
        crate::emden_fowler::radial_laplacian(nn, r, &d[..3])[0]
    };
    IntegrabilityFlags {
        laplacian: shell_convergent(lap, n, alpha, p),
        gradient: shell_convergent(|r| u.derivatives(r)[1], n, alpha - p, p),
        value: shell_convergent(|r| u.value(r), n, alpha - 2.0 * p, p),
    }
}

/// `int |f|^p ds` of a line function, a convenience for reports.
pub fn line_lp(f: &dyn LineFunction, p: f64, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(integrate_line(|s| f.value(s).abs().powf(p), f.decay(), cfg)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::{u2_profile, u_cor_profile, UTilde};

    #[test]
    fn f_system_small() {
        for (p, q, l) in [(2.0, 4.0, 1.0), (1.5, 3.0, -0.8)] {
            let f = ExtremalF::new(p, q, l).unwrap();
            let r = residual_f_system(&f, &line_samples(-20.0, 20.0, 401));
            assert!(r.system_max_abs() < 1e-6, "{}", r.system_max_abs());
            assert!(r.conservation.max_abs < 1e-9);
        }
    }

    #[test]
    fn g_equation_small() {
        for (a, h) in [(0.0, 1.0), (0.1, -1.0)] {
            let g = ExtremalG::from_a_h(2.0, 4.0, a, h).unwrap();
            let r = residual_g_equation(&g, &line_samples(-8.0, 8.0, 17)).unwrap();
            assert!(r.equation.max_abs < 1e-6, "{}", r.equation.max_abs);
            assert!(r.b_identity.max_abs < 1e-8);
        }
    }

    #[test]
    fn p_laplace_u1() {
        for (n, p, q, alpha) in [(3, 2.0, 4.0, 0.0), (4, 2.0, 3.0, 1.0), (3, 2.5, 4.0, -2.0)] {
            let params = ProblemParams::new(n, p, alpha, 1).unwrap();
            let u = U1::new(&params, q).unwrap();
            let r = residual_radial_p_laplace(
                &u,
                &log_samples(0.05, 20.0, 60),
                OuterDerivative::Analytic,
            );
            assert!(r.max_rel < 1e-10, "{n} {p} {alpha}: {}", r.max_rel);
        }
    }

    #[test]
    fn p_laplace_difference_converges() {
        let params = ProblemParams::new(3, 2.0, 0.0, 1).unwrap();
        let u = U1::new(&params, 4.0).unwrap();
        let xs = log_samples(0.1, 10.0, 20);
        let a = residual_radial_p_laplace(&u, &xs, OuterDerivative::Difference { h: 1e-2 });
        let b = residual_radial_p_laplace(&u, &xs, OuterDerivative::Difference { h: 5e-3 });
        assert!(a.max_abs / b.max_abs > 3.0);
    }

    #[test]
    fn biharmonic_weak_and_strong() {
        let cfg = QuadratureConfig::default();
        let params = ProblemParams::new(5, 2.0, 0.0, 2).unwrap();
        let q = 10.0 / 3.0;
        let u = u_cor_profile(5, 2.0).unwrap();
        let weak =
            residual_radial_biharmonic(&u, &params, q, BiharmonicMode::Weak, &[], &cfg).unwrap();
        assert!(weak.max_rel < 1e-6, "{}", weak.max_rel);
        let strong = residual_radial_biharmonic(
            &u,
            &params,
            q,
            BiharmonicMode::Strong,
            &log_samples(0.05, 20.0, 40),
            &cfg,
        )
        .unwrap();
        assert!(strong.max_rel < 1e-9, "{}", strong.max_rel);
        let lo = ProblemParams::new(3, 2.0, -0.5, 2).unwrap();
        let u = u2_profile(&lo, 4.0).unwrap();
        let weak =
            residual_radial_biharmonic(&u, &lo, 4.0, BiharmonicMode::Weak, &[], &cfg).unwrap();
        assert!(weak.max_rel < 1e-6, "{}", weak.max_rel);
    }

    #[test]
    fn utilde_identity() {
        let r = utilde_phi_identity(4, &log_samples(0.01, 50.0, 100)).unwrap();
        assert!(r.max_abs < 1e-8);
    }

    #[test]
    fn hle_hyperbola() {
        let params = ProblemParams::new(5, 2.3, 0.4, 2)
            .unwrap()
            .with_q(3.1)
            .unwrap();
        let h = hle_system_check(&params).unwrap();
        assert!(h.hyperbola_relative < 1e-13);
        assert!(h.a_ne_minus_n && h.b_ne_minus_n);
        let deg = ProblemParams::new(5, 2.0, 5.0, 2)
            .unwrap()
            .with_q(3.0)
            .unwrap();
        assert!(!hle_system_check(&deg).unwrap().a_ne_minus_n);
    }

    #[test]
    fn integrability_examples() {
        let ut = UTilde::new(4).unwrap();
        let params = ProblemParams::new(4, 2.0, 0.0, 2).unwrap();
        let f = integrability_flags(&ut, &params);
        assert_eq!((f.laplacian, f.gradient, f.value), (true, true, false));
        let uc = u_cor_profile(5, 2.0).unwrap();
        let params = ProblemParams::new(5, 2.0, 0.0, 2).unwrap();
        let f = integrability_flags(&uc, &params);
        assert_eq!((f.laplacian, f.gradient, f.value), (true, true, true));
        let ann = EmdenFowler {
            g: Arc::new(Bump::unit()),
            e: 0.0,
        };
        let f = integrability_flags(&ann, &params);
        assert_eq!((f.laplacian, f.gradient, f.value), (true, true, true));
    }
}
