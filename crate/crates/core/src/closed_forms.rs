//! Explicit extremals: the one-dimensional `F`, its momentum `Phi`, the second-order `G`,
//! and the radial profiles `U1`, `U2`, `U_cor`, `U~`.
//!
//! Smooth closed forms are evaluated in the log domain and differentiated through
//! [`Jet`]s, so derivatives are exact up to round-off.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::emden_fowler::{Derivs, LineFunction, RadialProfile};
use crate::error::{invalid, Result};
use crate::numerics::{
    integrate_breakpoints, integrate_interval, integrate_to_infinity, Decay, Integral, Jet,
    QuadratureConfig, JET_LEN,
};
use crate::params::ProblemParams;

/// `ln cosh x` without overflow.
pub fn lncosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// `ln(1 + e^y)` without overflow.
pub fn softplus(y: f64) -> f64 {
    y.max(0.0) + (-y.abs()).exp().ln_1p()
}

fn lncosh_jet(x: Jet) -> Jet {
    if x.value() >= 0.0 {
        x + x.scale(-2.0).exp().add_const(1.0).ln().add_const(-LN_2)
    } else {
        -x + x.scale(2.0).exp().add_const(1.0).ln().add_const(-LN_2)
    }
}

fn softplus_jet(y: Jet) -> Jet {
    if y.value() >= 0.0 {
        y + (-y).exp().add_const(1.0).ln()
    } else {
        y.exp().add_const(1.0).ln()
    }
}

/// `lambda f phi + |f|^q / q + |phi|^{p'} / p'`.
pub fn hamiltonian(f: f64, phi: f64, lambda: f64, p: f64, q: f64) -> f64 {
    let pc = p / (p - 1.0);
    lambda * f * phi + f.abs().powf(q) / q + phi.abs().powf(pc) / pc
}

/// `F(s) = k_F e^{c1 s} cosh(c2 s)^{p/(p-q)}`, the extremal of `M_{p,q}(lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalF {
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub k_f: f64,
    pub c1: f64,
    pub c2: f64,
}

impl ExtremalF {
    pub fn new(p: f64, q: f64, lambda: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(invalid("p", "need p > 1"));
        }
        if !(q > p) {
            return Err(invalid("q", "need q > p"));
        }
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(invalid("lambda", "need a finite nonzero lambda"));
        }
        let pc = p / (p - 1.0);
        let k_f = (q * pc.powf(p - 1.0) * (0.5 * lambda).abs().powf(p)).powf(1.0 / (q - p));
        Ok(Self {
            p,
            q,
            lambda,
            k_f,
            c1: lambda * (p - 2.0) / (2.0 * (p - 1.0)),
            c2: lambda * (q - p) / (2.0 * (p - 1.0)),
        })
    }

    fn cosh_power(&self) -> f64 {
        self.p / (self.p - self.q)
    }

    pub fn ln_value(&self, s: f64) -> f64 {
        self.k_f.ln() + self.c1 * s + self.cosh_power() * lncosh(self.c2 * s)
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.ln_value(s).exp()
    }

    pub fn eval_prime(&self, s: f64) -> f64 {
        let psi = self.c1 + self.cosh_power() * self.c2 * (self.c2 * s).tanh();
        self.eval(s) * psi
    }

    /// `F, F', F'', F'''` from `F' = F psi` with `psi = c1 + e c2 tanh(c2 s)`.
    pub fn derivs3(&self, s: f64) -> [f64; 4] {
        let e = self.cosh_power();
        let th = (self.c2 * s).tanh();
        let sech2 = 1.0 - th * th;
        let psi = self.c1 + e * self.c2 * th;
        let dpsi = e * self.c2 * self.c2 * sech2;
        let ddpsi = -2.0 * e * self.c2.powi(3) * sech2 * th;
        let f = self.eval(s);
        [
            f,
            f * psi,
            f * (psi * psi + dpsi),
            f * (psi.powi(3) + 3.0 * psi * dpsi + ddpsi),
        ]
    }

    fn phi_rate(&self) -> (f64, f64) {
        let p = self.p;
        (
            (p - 1.0) * (self.c1 + self.c2),
            self.q * (p - 1.0) / (p - self.q),
        )
    }

    /// The momentum `Phi = |F' - lambda F|^{p-2}(F' - lambda F)` in closed form.
    pub fn phi(&self, s: f64) -> f64 {
        let p = self.p;
        let (rate, cosh_pow) = self.phi_rate();
        let ln_amp =
            (p - 1.0) * (self.k_f.ln() + p.ln() - LN_2 - (p - 1.0).ln() + self.lambda.abs().ln());
        let mag = (ln_amp + rate * s + cosh_pow * lncosh(self.c2 * s)).exp();
        -mag * self.lambda.signum()
    }

    pub fn phi_prime(&self, s: f64) -> f64 {
        let (rate, cosh_pow) = self.phi_rate();
        self.phi(s) * (rate + cosh_pow * self.c2 * (self.c2 * s).tanh())
    }
}

impl LineFunction for ExtremalF {
    fn k_max(&self) -> usize {
        JET_LEN - 1
    }

    fn derivatives(&self, s: f64) -> Derivs {
        let x = Jet::variable(s);
        let ln_f = x.scale(self.c1).add_const(self.k_f.ln())
            + lncosh_jet(x.scale(self.c2)).scale(self.cosh_power());
        ln_f.exp().derivatives()
    }

    fn decay(&self) -> Decay {
        Decay::Exponential
    }
}

/// The extremal of `J_{p,q}(A, gamma, H)`; `B_+ G = F` with `lambda = gamma / H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalG {
    pub p: f64,
    pub q: f64,
    pub a: f64,
    pub gamma: f64,
    pub h: f64,
    pub k_g: f64,
    pub f: ExtremalF,
    #[serde(skip)]
    pub cfg: QuadratureConfig,
}

impl ExtremalG {
    pub fn new(p: f64, q: f64, a: f64, gamma: f64, h: f64) -> Result<Self> {
        if gamma == 0.0 || h == 0.0 {
            return Err(invalid("gamma", "need gamma != 0 and H != 0"));
        }
        if a * a + gamma < 0.0 {
            return Err(invalid("gamma", "need A^2 + gamma >= 0"));
        }
        let c = h * h + 2.0 * a * h - gamma;
        if c.abs() > 1e-10 * (1.0 + h * h + (a * h).abs() + gamma.abs()) {
            return Err(invalid(
                "h",
                format!("constraint H^2 + 2AH - gamma = 0 violated by {c:e}"),
            ));
        }
        let lambda = gamma / h;
        let f = ExtremalF::new(p, q, lambda)?;
        let pc = p / (p - 1.0);
        let k_g = (q * pc.powf(p - 1.0) * lambda.abs().powf(p)).powf(1.0 / (q - p));
        Ok(Self {
            p,
            q,
            a,
            gamma,
            h,
            k_g,
            f,
            cfg: QuadratureConfig::default(),
        })
    }

    /// `gamma` from the constraint `gamma = H^2 + 2AH`.
    pub fn from_a_h(p: f64, q: f64, a: f64, h: f64) -> Result<Self> {
        Self::new(p, q, a, h * h + 2.0 * a * h, h)
    }

    pub fn lambda(&self) -> f64 {
        self.f.lambda
    }

    /// `G^{(i)}(s)` through the convolution with `F^{(i)}`, `i <= 3`.
    pub fn eval_derivative(&self, s: f64, i: usize) -> Result<f64> {
        let h = self.h;
        let f = &self.f;
        let integrand = |u: f64| {
            let t = if h > 0.0 { s - u } else { s + u };
            let w = (-h.abs() * u).exp();
            if w == 0.0 {
                return 0.0;
            }
            let d = if i == 0 { f.eval(t) } else { f.derivs3(t)[i] };
            w * d
        };
        // the kernel peaks near u = |s| on the side where F is centred
        let knee = if h > 0.0 { s.max(0.0) } else { (-s).max(0.0) };
        let head = integrate_interval(&integrand, 0.0, knee + 1.0, &self.cfg)?;
        let tail = integrate_to_infinity(&integrand, knee + 1.0, &self.cfg)?;
        Ok(head.value + tail.value)
    }

    /// `G(s)` from the convolution form.
    pub fn eval(&self, s: f64) -> Result<f64> {
        self.eval_derivative(s, 0)
    }

    /// `G(s)` from the incomplete integral in `t`, evaluated in `v = ln t`.
    pub fn eval_t_form(&self, s: f64) -> Result<f64> {
        let (p, q, h, g) = (self.p, self.q, self.h, self.gamma);
        let a = g / (h * (p - 1.0)) - h - 1.0;
        let b = g * (q - p) / (h * (p - 1.0));
        let e = p / (p - q);
        let ln_k = self.k_g.ln();
        let integrand = |v: f64| (ln_k - h * s + (a + 1.0) * v + e * softplus(b * v)).exp();
        let v0 = -s;
        let out: Integral = if h > 0.0 {
            integrate_to_infinity(integrand, v0, &self.cfg)?
        } else {
            integrate_to_infinity(|w| integrand(-w), -v0, &self.cfg)?
        };
        Ok(out.value)
    }
}

impl LineFunction for ExtremalG {
    fn k_max(&self) -> usize {
        3
    }

    fn derivatives(&self, s: f64) -> Derivs {
        let mut out = [f64::NAN; JET_LEN];
        for (i, o) in out.iter_mut().enumerate().take(4) {
            *o = self.eval_derivative(s, i).unwrap_or(f64::NAN);
        }
        out
    }

    fn decay(&self) -> Decay {
        Decay::Exponential
    }
}

/// The first-order radial extremal `U1(r) = K (1 + r^b)^{p/(p-q)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct U1 {
    pub params: ProblemParams,
    pub q: f64,
    pub amplitude: f64,
    pub b: f64,
}

impl U1 {
    pub fn new(params: &ProblemParams, q: f64) -> Result<Self> {
        let (n, p, alpha) = (params.nf(), params.p, params.alpha);
        let c = n - p + alpha;
        if c.abs() <= params.zero_tolerance() {
            return Err(invalid("alpha", "need alpha != p - n"));
        }
        if !(q > p) {
            return Err(invalid("q", "need q > p"));
        }
        let amplitude = (q / p * c.abs().powf(p) / (p - 1.0).powf(p - 1.0)).powf(1.0 / (q - p));
        Ok(Self {
            params: *params,
            q,
            amplitude,
            b: c * (q - p) / (p * (p - 1.0)),
        })
    }

    fn outer(&self) -> f64 {
        self.params.p / (self.params.p - self.q)
    }
}

impl RadialProfile for U1 {
    fn k_max(&self) -> usize {
        JET_LEN - 1
    }

    fn derivatives(&self, r: f64) -> Derivs {
        let x = Jet::variable(r).ln();
        let ln_u = softplus_jet(x.scale(self.b))
            .scale(self.outer())
            .add_const(self.amplitude.ln());
        ln_u.exp().derivatives()
    }

    fn decay_in_s(&self) -> Decay {
        Decay::Exponential
    }
}

/// Which end the incomplete integral of a radial profile starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `int_r^inf`
    Upper,
    /// `int_0^r`
    Lower,
}

/// `U(r) = K int w(t) dt` with `w(t) = t^c (1 + t^b)^e`, integrated from `r` to infinity
/// or from `0` to `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerIntegralProfile {
    pub amplitude: f64,
    pub c: f64,
    pub b: f64,
    pub e: f64,
    pub branch: Branch,
    #[serde(skip)]
    pub cfg: QuadratureConfig,
}

impl PowerIntegralProfile {
    fn ln_w(&self, v: f64) -> f64 {
        self.c * v + self.e * softplus(self.b * v)
    }

    /// `K int w`, in `v = ln t`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        let v0 = r.ln();
        let ln_k = self.amplitude.ln();
        let integrand = |v: f64| (ln_k + v + self.ln_w(v)).exp();
        let out = match self.branch {
            Branch::Upper => integrate_to_infinity(integrand, v0, &self.cfg)?,
            Branch::Lower => integrate_to_infinity(|w| integrand(-w), -v0, &self.cfg)?,
        };
        Ok(out.value)
    }

    /// `U'(r) = -K w(r)` (upper) or `K w(r)` (lower) and its derivatives as a jet.
    pub fn derivative_jet(&self, r: f64) -> Jet {
        let x = Jet::variable(r).ln();
        let ln_w = x.scale(self.c) + softplus_jet(x.scale(self.b)).scale(self.e);
        let sign = match self.branch {
            Branch::Upper => -1.0,
            Branch::Lower => 1.0,
        };
        ln_w.add_const(self.amplitude.ln()).exp().scale(sign)
    }

    /// `U, U', ..., U^(JET_LEN-1)`; `U` by quadrature, the rest in closed form.
    pub fn derivatives_checked(&self, r: f64) -> Result<Derivs> {
        let mut out = [0.0; JET_LEN];
        out[0] = self.eval(r)?;
        let d = self.derivative_jet(r).derivatives();
        out[1..].copy_from_slice(&d[..JET_LEN - 1]);
        Ok(out)
    }
}

impl RadialProfile for PowerIntegralProfile {
    fn k_max(&self) -> usize {
        JET_LEN - 1
    }

    fn derivatives(&self, r: f64) -> Derivs {
        self.derivatives_checked(r).unwrap_or([f64::NAN; JET_LEN])
    }

    fn decay_in_s(&self) -> Decay {
        Decay::Exponential
    }
}

/// The second-order extremal `U2` of the biharmonic-type problem.
pub fn u2_profile(params: &ProblemParams, q: f64) -> Result<PowerIntegralProfile> {
    let (n, p, alpha) = (params.nf(), params.p, params.alpha);
    let tol = params.zero_tolerance();
    if (alpha - (2.0 * p - n)).abs() <= tol || (alpha - (n * p - n)).abs() <= tol {
        return Err(invalid("alpha", "need alpha outside {2p - n, np - n}"));
    }
    if !(q > p) {
        return Err(invalid("q", "need q > p"));
    }
    let d = n * p - n - alpha;
    let amplitude = (q / p * d.abs().powf(p) / (p - 1.0).powf(p - 1.0)).powf(1.0 / (q - p));
    Ok(PowerIntegralProfile {
        amplitude,
        c: 1.0 - alpha / (p - 1.0),
        b: d * (q - p) / (p * (p - 1.0)),
        e: p / (p - q),
        branch: if alpha > 2.0 * p - n {
            Branch::Upper
        } else {
            Branch::Lower
        },
        cfg: QuadratureConfig::default(),
    })
}

/// The unweighted second-order extremal at the critical exponent `p* = np/(n-p)`.
pub fn u_cor_profile(n: u32, p: f64) -> Result<PowerIntegralProfile> {
    let nf = n as f64;
    if !(nf > 2.0 * p) {
        return Err(invalid("n", format!("need n > 2p, got n={n}, p={p}")));
    }
    if !(p > 1.0) {
        return Err(invalid("p", "need p > 1"));
    }
    let pstar = nf * p / (nf - p);
    let amplitude = nf.powf((nf - p) / p) * (nf * (p - 1.0) / (nf - p)).powf((nf - p) / (p * p));
    Ok(PowerIntegralProfile {
        amplitude,
        c: 1.0,
        b: pstar,
        e: (p - nf) / p,
        branch: Branch::Upper,
        cfg: QuadratureConfig::default(),
    })
}

/// The borderline profile for `n = 2p`: `U~'(r) = k r / (1 + r^n)`, `k = n (n-2)^{2/n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UTilde {
    pub n: u32,
    pub k: f64,
    #[serde(skip)]
    pub cfg: QuadratureConfig,
}

impl UTilde {
    pub fn new(n: u32) -> Result<Self> {
        if n < 4 || n % 2 == 1 {
            return Err(invalid("n", "need an even n >= 4 (n = 2p)"));
        }
        let nf = n as f64;
        Ok(Self {
            n,
            k: nf * (nf - 2.0).powf(2.0 / nf),
            cfg: QuadratureConfig::default(),
        })
    }

    pub fn p(&self) -> f64 {
        0.5 * self.n as f64
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.k * r / (1.0 + r.powi(self.n as i32))
    }

    /// `U~(r) = int_0^r U~'`, normalized by `U~(0) = 0`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        let mut pts = vec![0.0];
        if r > 1.0 {
            pts.push(1.0);
        }
        pts.push(r);
        Ok(integrate_breakpoints(|t| self.derivative(t), &pts, &self.cfg)?.value)
    }

    /// `(value, derivative)` at `r`.
    pub fn eval_pair(&self, r: f64) -> Result<(f64, f64)> {
        Ok((self.eval(r)?, self.derivative(r)))
    }

    /// `Delta U~ = n k (1 + r^n)^{-2}`.
    pub fn laplacian(&self, r: f64) -> f64 {
        let d = 1.0 + r.powi(self.n as i32);
        self.n as f64 * self.k / (d * d)
    }
}

impl RadialProfile for UTilde {
    fn k_max(&self) -> usize {
        JET_LEN - 1
    }

    fn derivatives(&self, r: f64) -> Derivs {
        let x = Jet::variable(r);
        let d = x.scale(self.k) * x.powi(self.n).add_const(1.0).recip();
        let mut out = [0.0; JET_LEN];
        out[0] = self.eval(r).unwrap_or(f64::NAN);
        let dd = d.derivatives();
        out[1..].copy_from_slice(&dd[..JET_LEN - 1]);
        out
    }

    fn decay_in_s(&self) -> Decay {
        Decay::Exponential
    }
}
