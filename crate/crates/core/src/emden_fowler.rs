//! The Emden–Fowler transform `T_k`, its inverse, constant-coefficient operators on the
//! line and the norm identities tying radial integrals on `R^n` to integrals on `R`.
//!
//! With `s = -ln r`, `(T_k g)(r) = r^{-H_{alpha,k}} g(s)`.

use std::sync::Arc;

use crate::error::{invalid, HrlError, Result};
use crate::numerics::{integrate_line, Decay, Jet, QuadratureConfig, JET_LEN};
use crate::params::ProblemParams;

/// Derivatives `g, g', ..., g^(JET_LEN-1)` at a point. Entries past `k_max` are NaN.
pub type Derivs = [f64; JET_LEN];

/// A smooth function on the line with derivatives up to `k_max`.
pub trait LineFunction: Send + Sync {
    fn k_max(&self) -> usize;
    fn derivatives(&self, s: f64) -> Derivs;
    fn decay(&self) -> Decay;

    fn value(&self, s: f64) -> f64 {
        self.derivatives(s)[0]
    }
}

/// A radial function `u(r)` on `r > 0` with radial derivatives up to `k_max`.
pub trait RadialProfile: Send + Sync {
    fn k_max(&self) -> usize;
    /// `u, u', ..., u^(JET_LEN-1)` at `r`; entries past `k_max` are NaN.
    fn derivatives(&self, r: f64) -> Derivs;
    /// Where the profile lives, in the variable `s = -ln r`.
    fn decay_in_s(&self) -> Decay;

    fn value(&self, r: f64) -> f64 {
        self.derivatives(r)[0]
    }
}

fn nan_tail(mut d: Derivs, k_max: usize) -> Derivs {
    d.iter_mut().skip(k_max + 1).for_each(|v| *v = f64::NAN);
    d
}

/// `P(s - s0) exp(-(s - s0)^2 / sigma^2)` with `P` given by ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussPoly {
    pub coeffs: Vec<f64>,
    pub s0: f64,
    pub sigma: f64,
}

impl GaussPoly {
    pub fn new(coeffs: Vec<f64>, s0: f64, sigma: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid(
                "coeffs",
                "polynomial needs at least one coefficient",
            ));
        }
        if !(sigma > 0.0) {
            return Err(invalid("sigma", "width must be positive"));
        }
        Ok(Self { coeffs, s0, sigma })
    }

    pub fn gaussian() -> Self {
        Self {
            coeffs: vec![1.0],
            s0: 0.0,
            sigma: 1.0,
        }
    }
}

impl LineFunction for GaussPoly {
    fn k_max(&self) -> usize {
        JET_LEN - 1
    }

    fn derivatives(&self, s: f64) -> Derivs {
        let t = Jet::variable(s - self.s0);
        let mut poly = Jet::constant(0.0);
        for c in self.coeffs.iter().rev() {
            poly = (poly * t).add_const(*c);
        }
        let env = (t * t).scale(-1.0 / (self.sigma * self.sigma)).exp();
        (poly * env).derivatives()
    }

    fn decay(&self) -> Decay {
        // the polynomial factor widens the effective support a little
        Decay::Gaussian {
            center: self.s0,
            width: self.sigma * (1.0 + 0.25 * self.coeffs.len() as f64),
        }
    }
}

/// The `C^inf` bump `amp * exp(-1 / (1 - t^2))`, `t = (s - center) / half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    pub amp: f64,
}

impl Bump {
    pub fn new(center: f64, half_width: f64, amp: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(invalid("half_width", "must be positive"));
        }
        Ok(Self {
            center,
            half_width,
            amp,
        })
    }

    pub fn unit() -> Self {
        Self {
            center: 0.0,
            half_width: 1.0,
            amp: 1.0,
        }
    }
}

impl LineFunction for Bump {
    fn k_max(&self) -> usize {
        JET_LEN - 1
    }

    fn derivatives(&self, s: f64) -> Derivs {
        let t0 = (s - self.center) / self.half_width;
        if t0.abs() >= 1.0 {
            return [0.0; JET_LEN];
        }
        let t = Jet::variable(t0);
        let inner = (t * t).scale(-1.0).add_const(1.0).recip().scale(-1.0);
        let mut d = inner.exp().scale(self.amp).derivatives();
        let mut f = 1.0;
        for v in d.iter_mut() {
            *v *= f;
            f /= self.half_width;
        }
        d
    }

    fn decay(&self) -> Decay {
        Decay::Compact {
            a: self.center - self.half_width,
            b: self.center + self.half_width,
        }
    }
}

/// `s -> g(eps * s)`.
#[derive(Clone)]
pub struct Rescaled {
    pub inner: Arc<dyn LineFunction>,
    pub eps: f64,
}

impl Rescaled {
    pub fn new(inner: Arc<dyn LineFunction>, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(invalid("eps", "rescaling factor must be positive"));
        }
        Ok(Self { inner, eps })
    }
}

impl LineFunction for Rescaled {
    fn k_max(&self) -> usize {
        self.inner.k_max()
    }

    fn derivatives(&self, s: f64) -> Derivs {
        let mut d = self.inner.derivatives(self.eps * s);
        let mut f = 1.0;
        for v in d.iter_mut() {
            *v *= f;
            f *= self.eps;
        }
        d
    }

    fn decay(&self) -> Decay {
        match self.inner.decay() {
            Decay::Compact { a, b } => Decay::Compact {
                a: a / self.eps,
                b: b / self.eps,
            },
            Decay::Gaussian { center, width } => Decay::Gaussian {
                center: center / self.eps,
                width: width / self.eps,
            },
            Decay::Exponential => Decay::Exponential,
        }
    }
}

/// `s -> g(s - shift)`.
#[derive(Clone)]
pub struct Translated {
    pub inner: Arc<dyn LineFunction>,
    pub shift: f64,
}

impl LineFunction for Translated {
    fn k_max(&self) -> usize {
        self.inner.k_max()
    }

    fn derivatives(&self, s: f64) -> Derivs {
        self.inner.derivatives(s - self.shift)
    }

    fn decay(&self) -> Decay {
        match self.inner.decay() {
            Decay::Compact { a, b } => Decay::Compact {
                a: a + self.shift,
                b: b + self.shift,
            },
            Decay::Gaussian { center, width } => Decay::Gaussian {
                center: center + self.shift,
                width,
            },
            Decay::Exponential => Decay::Exponential,
        }
    }
}

/// A polynomial in `D = d/ds` with ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffPoly(pub Vec<f64>);

impl DiffPoly {
    pub fn identity() -> Self {
        Self(vec![1.0])
    }

    /// `D^2 - 2A D - gamma`.
    pub fn l_factor(a: f64, gamma: f64) -> Self {
        Self(vec![-gamma, -2.0 * a, 1.0])
    }

    /// `D + c`.
    pub fn first_order(c: f64) -> Self {
        Self(vec![c, 1.0])
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn compose(&self, other: &DiffPoly) -> DiffPoly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        DiffPoly(out)
    }

    /// The symbol `P(mu)`, i.e. the eigenvalue on `e^{mu s}`.
    pub fn symbol(&self, mu: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * mu + c)
    }

    /// `(P g)^{(i)}` for `i = 0..=k_max - degree` from the derivatives of `g`.
    pub fn apply_derivs(&self, d: &Derivs, k_max: usize) -> Derivs {
        let deg = self.degree();
        let mut out = [f64::NAN; JET_LEN];
        for (i, o) in out.iter_mut().enumerate() {
            if i + deg > k_max {
                break;
            }
            *o = self.0.iter().enumerate().map(|(j, c)| c * d[i + j]).sum();
        }
        out
    }
}

/// `P(D) g` as a line function.
#[derive(Clone)]
pub struct Applied {
    pub inner: Arc<dyn LineFunction>,
    pub op: DiffPoly,
}

impl LineFunction for Applied {
    fn k_max(&self) -> usize {
        self.inner.k_max() - self.op.degree()
    }

    fn derivatives(&self, s: f64) -> Derivs {
        self.op
            .apply_derivs(&self.inner.derivatives(s), self.inner.k_max())
    }

    fn decay(&self) -> Decay {
        self.inner.decay()
    }
}

fn apply_poly(g: Arc<dyn LineFunction>, op: DiffPoly) -> Result<Applied> {
    if g.k_max() < op.degree() {
        return Err(HrlError::OrderTooHigh {
            requested: op.degree(),
            available: g.k_max(),
        });
    }
    Ok(Applied { inner: g, op })
}

/// `g'' - 2A g' - gamma g`.
pub fn apply_l(g: Arc<dyn LineFunction>, a: f64, gamma: f64) -> Result<Applied> {
    apply_poly(g, DiffPoly::l_factor(a, gamma))
}

/// Sign of the first-order operator `B_+ g = g' + Hg` or `B_- g = g' - Hg`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BSign {
    Plus,
    Minus,
}

pub fn apply_b(g: Arc<dyn LineFunction>, h: f64, sign: BSign) -> Result<Applied> {
    let c = match sign {
        BSign::Plus => h,
        BSign::Minus => -h,
    };
    apply_poly(g, DiffPoly::first_order(c))
}

/// Optional first-order tail of an [`OperatorChain`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum FirstOrder {
    /// `g -> g' - lambda g`
    Lambda(f64),
    /// `g -> g' + H g`
    H(f64),
}

/// `L_1 o ... o L_m` with `L_h = D^2 - 2A_h D - gamma_h`, optionally followed by a
/// first-order factor.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OperatorChain {
    pub a: Vec<f64>,
    pub gamma: Vec<f64>,
    pub first_order: Option<FirstOrder>,
}

impl OperatorChain {
    pub fn new(a: Vec<f64>, gamma: Vec<f64>, first_order: Option<FirstOrder>) -> Result<Self> {
        if a.len() != gamma.len() {
            return Err(invalid("gamma", "A and gamma lists must have equal length"));
        }
        for (ah, gh) in a.iter().zip(gamma.iter()) {
            if ah * ah + gh < 0.0 {
                return Err(invalid(
                    "gamma",
                    format!("need A^2 + gamma >= 0, got A={ah}, gamma={gh}"),
                ));
            }
        }
        Ok(Self {
            a,
            gamma,
            first_order,
        })
    }

    /// The chain with `Delta^m T_{2m} = T_0 L` (even `k`) or `grad Delta^m T_{2m+1} = -T_0 B_+ L`
    /// (odd `k`).
    pub fn for_params(params: &ProblemParams) -> Self {
        let m = (params.k / 2) as i32;
        let odd = params.k % 2 == 1;
        let hs: Vec<i32> = (1..=m)
            .map(|h| if odd { 2 * h + 1 } else { 2 * h })
            .collect();
        Self {
            a: hs.iter().map(|h| params.a_h(*h)).collect(),
            gamma: hs.iter().map(|h| params.gamma_h(*h)).collect(),
            first_order: odd.then(|| FirstOrder::H(params.hardy_h())),
        }
    }

    pub fn poly(&self) -> DiffPoly {
        let mut p = DiffPoly::identity();
        for (a, g) in self.a.iter().zip(self.gamma.iter()) {
            p = p.compose(&DiffPoly::l_factor(*a, *g));
        }
        match self.first_order {
            Some(FirstOrder::Lambda(l)) => p.compose(&DiffPoly::first_order(-l)),
            Some(FirstOrder::H(h)) => p.compose(&DiffPoly::first_order(h)),
            None => p,
        }
    }

    pub fn order(&self) -> usize {
        self.poly().degree()
    }
}

pub fn apply_chain(g: Arc<dyn LineFunction>, chain: &OperatorChain) -> Result<Applied> {
    apply_poly(g, chain.poly())
}

/// Scaled radial jet: `v[j] = r^{e+j} u^{(j)}(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialJet {
    pub e: f64,
    pub v: Vec<f64>,
}

impl RadialJet {
    /// `u = r^{-e} g(-ln r)` from the derivatives of `g` at `s = -ln r`.
    pub fn from_line(d: &Derivs, e: f64, order: usize) -> Self {
        // c[j][i]: coefficient of g^{(i)} in r^{e+j} u^{(j)}
        let mut row = vec![0.0; order + 1];
        row[0] = 1.0;
        let mut v = vec![d[0]];
        for j in 0..order {
            let mut next = vec![0.0; order + 1];
            for i in 0..=j + 1 {
                let keep = if i <= j {
                    -(e + j as f64) * row[i]
                } else {
                    0.0
                };
                let shift = if i >= 1 { -row[i - 1] } else { 0.0 };
                next[i] = keep + shift;
            }
            row = next;
            v.push((0..=j + 1).map(|i| row[i] * d[i]).sum());
        }
        Self { e, v }
    }

    pub fn order(&self) -> usize {
        self.v.len() - 1
    }

    /// Radial Laplacian `u'' + (n-1) u'/r`, in scaled form with exponent `e + 2`.
    pub fn laplacian(&self, n: u32) -> Self {
        let nm1 = n as f64 - 1.0;
        let order = self.order().saturating_sub(2);
        let v = (0..=order)
            .map(|i| {
                let mut acc = self.v[i + 2];
                let mut fact = 1.0;
                let mut binom = 1.0;
                // l runs down from i; the factor is C(i,l) (-1)^{i-l} (i-l)!
                for t in 0..=i {
                    let l = i - t;
                    let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
                    acc += nm1 * binom * sign * fact * self.v[l + 1];
                    fact *= (t + 1) as f64;
                    binom = binom * l as f64 / (t + 1) as f64;
                }
                acc
            })
            .collect();
        Self { e: self.e + 2.0, v }
    }

    /// Radial derivative, in scaled form with exponent `e + 1`.
    pub fn derivative(&self) -> Self {
        Self {
            e: self.e + 1.0,
            v: self.v[1..].to_vec(),
        }
    }

    /// `grad^k`: `Delta^m` for `k = 2m`, `(Delta^m)'` for `k = 2m + 1`.
    pub fn grad_k(&self, n: u32, k: u32) -> Self {
        let mut out = self.clone();
        for _ in 0..k / 2 {
            out = out.laplacian(n);
        }
        if k % 2 == 1 {
            out = out.derivative();
        }
        out
    }

    /// Unscaled derivatives at `r`.
    pub fn physical(&self, r: f64) -> Vec<f64> {
        self.v
            .iter()
            .enumerate()
            .map(|(j, v)| v * r.powf(-self.e - j as f64))
            .collect()
    }
}

/// `T_k g` with exponent `e = H_{alpha,k}`.
#[derive(Clone)]
pub struct EmdenFowler {
    pub g: Arc<dyn LineFunction>,
    pub e: f64,
}

impl EmdenFowler {
    pub fn scaled_jet(&self, s: f64) -> RadialJet {
        RadialJet::from_line(&self.g.derivatives(s), self.e, self.g.k_max())
    }
}

impl RadialProfile for EmdenFowler {
    fn k_max(&self) -> usize {
        self.g.k_max()
    }

    fn derivatives(&self, r: f64) -> Derivs {
        let jet = self.scaled_jet(-r.ln());
        let mut out = [f64::NAN; JET_LEN];
        for (o, v) in out.iter_mut().zip(jet.physical(r)) {
            *o = v;
        }
        out
    }

    fn decay_in_s(&self) -> Decay {
        self.g.decay()
    }
}

/// The `k`-th order Emden–Fowler transform `(T_k g)(r) = r^{-H_{alpha,k}} g(-ln r)`.
pub fn transform_tk(g: Arc<dyn LineFunction>, params: &ProblemParams, k: u32) -> EmdenFowler {
    EmdenFowler {
        g,
        e: params.h_shift(k as i32),
    }
}

/// `g(s) = r^{e} u(r)` at `r = e^{-s}`.
#[derive(Clone)]
pub struct InverseTransform {
    pub u: Arc<dyn RadialProfile>,
    pub e: f64,
}

impl LineFunction for InverseTransform {
    fn k_max(&self) -> usize {
        self.u.k_max()
    }

    fn derivatives(&self, s: f64) -> Derivs {
        let r = (-s).exp();
        let k = self.u.k_max().min(JET_LEN - 1);
        let du = self.u.derivatives(r);
        let scaled: Vec<f64> = (0..=k).map(|j| du[j] * r.powf(self.e + j as f64)).collect();
        // invert the triangular chain table row by row
        let mut g = [f64::NAN; JET_LEN];
        let mut row = vec![0.0; k + 1];
        row[0] = 1.0;
        g[0] = scaled[0];
        for j in 0..k {
            let mut next = vec![0.0; k + 1];
            for i in 0..=j + 1 {
                let keep = if i <= j {
                    -(self.e + j as f64) * row[i]
                } else {
                    0.0
                };
                let shift = if i >= 1 { -row[i - 1] } else { 0.0 };
                next[i] = keep + shift;
            }
            row = next;
            let known: f64 = (0..=j).map(|i| row[i] * g[i]).sum();
            g[j + 1] = (scaled[j + 1] - known) / row[j + 1];
        }
        nan_tail(g, k)
    }

    fn decay(&self) -> Decay {
        self.u.decay_in_s()
    }
}

pub fn transform_inverse(
    u: Arc<dyn RadialProfile>,
    params: &ProblemParams,
    k: u32,
) -> InverseTransform {
    InverseTransform {
        u,
        e: params.h_shift(k as i32),
    }
}

/// Radial Laplacian of unscaled derivatives `[u, u', ...]` at `r`, as derivatives of `Delta u`.
pub fn radial_laplacian(n: u32, r: f64, d: &[f64]) -> Vec<f64> {
    let nm1 = n as f64 - 1.0;
    let order = d.len().saturating_sub(3);
    (0..=order)
        .map(|i| {
            // (Delta u)^{(i)} = u^{(i+2)} + (n-1) sum_l C(i,l) (1/r)^{(i-l)} u^{(l+1)}
            let mut acc = d[i + 2];
            let mut binom = 1.0;
            for l in 0..=i {
                let t = i - l;
                let inv = (-1.0_f64).powi(t as i32) * factorial(t) * r.powi(-(t as i32) - 1);
                acc += nm1 * binom * inv * d[l + 1];
                binom = binom * (i - l) as f64 / (l + 1) as f64;
            }
            acc
        })
        .collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `grad^k u` from unscaled radial derivatives.
pub fn radial_grad_k(n: u32, r: f64, d: &[f64], k: u32) -> f64 {
    let mut cur = d.to_vec();
    for _ in 0..k / 2 {
        cur = radial_laplacian(n, r, &cur);
    }
    if k % 2 == 1 {
        cur[1]
    } else {
        cur[0]
    }
}

/// Surface area `omega_n = 2 pi^{n/2} / Gamma(n/2)` of the unit sphere in `R^n`.
pub fn sphere_area(n: u32) -> f64 {
    let h = 0.5 * n as f64;
    (std::f64::consts::LN_2 + h * std::f64::consts::PI.ln() - libm::lgamma(h)).exp()
}

fn support_points(decay: Decay) -> Vec<f64> {
    match decay {
        Decay::Compact { a, b } => vec![a, b],
        Decay::Gaussian { center, width } => vec![center - 4.0 * width, center + 4.0 * width],
        Decay::Exponential => vec![-6.0, 6.0],
    }
}

/// `max |Delta(T_h g) - T_{h-2}(L_h g)|` over sample radii, relative to `max(1, peak)`.
pub fn laplacian_identity_check(
    g: Arc<dyn LineFunction>,
    params: &ProblemParams,
    h: u32,
) -> Result<f64> {
    if h < 2 {
        return Err(invalid("h", "need h >= 2"));
    }
    let hi = h as i32;
    let u = transform_tk(g.clone(), params, h);
    let lg = apply_l(g, params.a_h(hi), params.gamma_h(hi))?;
    let e_rhs = params.h_shift(hi - 2);
    let pts = support_points(u.decay_in_s());
    let (a, b) = (pts[0], pts[1]);
    let mut worst: f64 = 0.0;
    let mut peak: f64 = 1.0;
    for i in 0..=40 {
        let s = a + (b - a) * i as f64 / 40.0;
        let r = (-s).exp();
        let d = u.derivatives(r);
        let lhs = radial_laplacian(params.n, r, &d[..3])[0];
        let rhs = r.powf(-e_rhs) * lg.value(s);
        worst = worst.max((lhs - rhs).abs());
        peak = peak.max(rhs.abs()).max(lhs.abs());
    }
    Ok(worst / peak)
}

/// Both sides of `int |x|^alpha |grad^k T_k g|^p dx = omega_n int |P(D) g|^p ds`.
///
/// The left side is a radial quadrature of unscaled derivatives; the right side applies the
/// operator chain of [`OperatorChain::for_params`] on the line.
pub fn norm_identity(
    g: Arc<dyn LineFunction>,
    params: &ProblemParams,
    k: u32,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    if g.k_max() < k as usize {
        return Err(HrlError::OrderTooHigh {
            requested: k as usize,
            available: g.k_max(),
        });
    }
    let mut pk = *params;
    pk.k = k;
    let pos = pk.positivity_check();
    if !pos.positive {
        return Err(invalid(
            "alpha",
            format!("degenerate constant: {:?}", pos.offending),
        ));
    }
    let omega = sphere_area(params.n);
    let u = transform_tk(g.clone(), &pk, k);
    let n = params.n;
    let p = params.p;
    let w = n as f64 - 1.0 + params.alpha;
    let decay = g.decay();
    let lhs = integrate_line(
        |s| {
            let r = (-s).exp();
            let d = u.derivatives(r);
            let v = radial_grad_k(n, r, &d[..=k as usize], k);
            // dr = r ds
            r.powf(w + 1.0) * v.abs().powf(p)
        },
        decay,
        cfg,
    )?;
    let chain = apply_chain(g, &OperatorChain::for_params(&pk))?;
    let rhs = integrate_line(|s| chain.value(s).abs().powf(p), decay, cfg)?;
    Ok((omega * lhs.value, omega * rhs.value))
}

/// `omega_n int_0^inf r^{n-1+w} |u(r)|^p dr`, integrated in `s = -ln r`.
pub fn weighted_radial_norm(
    u: &dyn RadialProfile,
    n: u32,
    w: f64,
    p: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let exp = n as f64 + w;
    let v = integrate_line(
        |s| {
            let r = (-s).exp();
            r.powf(exp) * u.value(r).abs().powf(p)
        },
        u.decay_in_s(),
        cfg,
    )?;
    Ok(sphere_area(n) * v.value)
}
