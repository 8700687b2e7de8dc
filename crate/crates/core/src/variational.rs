//! Rayleigh quotients of the one-dimensional infima, a grid minimizer, the epsilon-rescaled
//! sharpness families and randomized verification of the inequalities.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::emden_fowler::{
    Applied, Bump, DiffPoly, EmdenFowler, FirstOrder, GaussPoly, LineFunction, OperatorChain,
    RadialJet, Rescaled,
};
use crate::error::{invalid, HrlError, Result};
use crate::numerics::{
    integrate_line, spow, spow_smooth, Decay, Grid, GridFunction, QuadratureConfig,
};
use crate::params::{half_line_constants, hardy_1d_constant, ProblemParams};

/// One of the quotients whose infimum is a sharp constant.
///
/// Every kind reads `int |N(D) g|^p / (int |Dn(D) g|^r)^{p/r}` on the line, `D = d/ds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuotientSpec {
    /// `int |g' - lambda g|^p / int |g|^p`
    Mp { p: f64, lambda: f64 },
    /// `int |g' - lambda g|^p / (int |g|^q)^{p/q}`
    Mpq { p: f64, q: f64, lambda: f64 },
    /// `int |g'' - 2A g' - gamma g|^p / int |g|^p`
    Ip { p: f64, a: f64, gamma: f64 },
    /// `int |g'' - 2A g' - gamma g|^p / (int |g|^q)^{p/q}`
    Ipq { p: f64, q: f64, a: f64, gamma: f64 },
    /// `int |g'' - 2A g' - gamma g|^p / int |g' + H g|^p`
    Jp { p: f64, a: f64, gamma: f64, h: f64 },
    /// `int |g'' - 2A g' - gamma g|^p / (int |g' + H g|^q)^{p/q}`
    Jpq {
        p: f64,
        q: f64,
        a: f64,
        gamma: f64,
        h: f64,
    },
    /// `int |(D - lambda) L g|^p / int |g|^p` for a chain `L`
    MChain { p: f64, chain: OperatorChain },
    /// `int r^a |w'|^p dr / int r^{a-p} |w|^p dr` in the line variable
    Hardy1d { p: f64, a: f64 },
    /// The radial quotient on `R^n` of order `k`, against order `j` with exponent `q` when
    /// both are present, otherwise against `|x|^{alpha - kp} |u|^p`.
    RellichNd { params: ProblemParams },
}

/// Line form of a quotient.
#[derive(Debug, Clone, PartialEq)]
pub struct LineForm {
    pub num: DiffPoly,
    pub den: DiffPoly,
    pub p: f64,
    /// Exponent of the denominator integral.
    pub r: f64,
    /// Multiplies the line quotient; `omega_n^{1 - p/q}` for radial Sobolev-type kinds.
    pub prefactor: f64,
}

/// Line operator of `grad^j T_k` up to sign: `grad^j T_k g = +-T_{k-j}(P g)`.
fn transport_poly(params: &ProblemParams, j: u32) -> DiffPoly {
    let k = params.k as i32;
    let mut poly = DiffPoly::identity();
    let mut h = k;
    for _ in 0..j / 2 {
        poly = poly.compose(&DiffPoly::l_factor(params.a_h(h), params.gamma_h(h)));
        h -= 2;
    }
    if j % 2 == 1 {
        poly = poly.compose(&DiffPoly::first_order(params.h_shift(h)));
    }
    poly
}

impl QuotientSpec {
    pub fn p(&self) -> f64 {
        match self {
            Self::Mp { p, .. }
            | Self::Mpq { p, .. }
            | Self::Ip { p, .. }
            | Self::Ipq { p, .. }
            | Self::Jp { p, .. }
            | Self::Jpq { p, .. }
            | Self::MChain { p, .. }
            | Self::Hardy1d { p, .. } => *p,
            Self::RellichNd { params } => params.p,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mp { .. } => "m_p",
            Self::Mpq { .. } => "m_pq",
            Self::Ip { .. } => "i_p",
            Self::Ipq { .. } => "i_pq",
            Self::Jp { .. } => "j_p",
            Self::Jpq { .. } => "j_pq",
            Self::MChain { .. } => "m_chain",
            Self::Hardy1d { .. } => "hardy1d",
            Self::RellichNd { .. } => "rellich_nd",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if !(p > 1.0) {
            return Err(invalid("p", "need p > 1"));
        }
        let check_q = |q: f64| {
            if q > p {
                Ok(())
            } else {
                Err(invalid("q", "need q > p"))
            }
        };
        let check_i = |a: f64, g: f64| {
            if a * a + g >= 0.0 {
                Ok(())
            } else {
                Err(invalid("gamma", "need A^2 + gamma >= 0"))
            }
        };
        match self {
            Self::Mpq { q, .. } => check_q(*q),
            Self::Ip { a, gamma, .. } | Self::Jp { a, gamma, .. } => check_i(*a, *gamma),
            Self::Ipq { q, a, gamma, .. } | Self::Jpq { q, a, gamma, .. } => {
                check_q(*q)?;
                check_i(*a, *gamma)
            }
            Self::MChain { chain, .. } => {
                OperatorChain::new(chain.a.clone(), chain.gamma.clone(), chain.first_order)
                    .map(|_| ())
            }
            Self::RellichNd { params } => {
                params.validate()?;
                if params.q.is_some() && params.j.is_none() {
                    return Err(invalid("j", "an exponent q needs an intermediate order j"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn line_form(&self) -> Result<LineForm> {
        self.validate()?;
        let p = self.p();
        let id = DiffPoly::identity();
        let l = |a: f64, g: f64| DiffPoly::l_factor(a, g);
        let form = |num: DiffPoly, den: DiffPoly, r: f64| LineForm {
            num,
            den,
            p,
            r,
            prefactor: 1.0,
        };
        Ok(match self {
            Self::Mp { lambda, .. } => form(DiffPoly::first_order(-lambda), id, p),
            Self::Mpq { q, lambda, .. } => form(DiffPoly::first_order(-lambda), id, *q),
            Self::Ip { a, gamma, .. } => form(l(*a, *gamma), id, p),
            Self::Ipq { q, a, gamma, .. } => form(l(*a, *gamma), id, *q),
            Self::Jp { a, gamma, h, .. } => form(l(*a, *gamma), DiffPoly::first_order(*h), p),
            Self::Jpq { q, a, gamma, h, .. } => form(l(*a, *gamma), DiffPoly::first_order(*h), *q),
            Self::MChain { chain, .. } => form(chain.poly(), id, p),
            Self::Hardy1d { a, .. } => {
                // w = r^{-e} g(-ln r), e = (a + 1 - p)/p, gives |w'| = r^{-e-1}|g' + e g|
                let e = (a + 1.0 - p) / p;
                form(DiffPoly::first_order(e), id, p)
            }
            Self::RellichNd { params } => {
                let num = OperatorChain::for_params(params).poly();
                match (params.j, params.q) {
                    (Some(j), Some(q)) => {
                        let omega = crate::emden_fowler::sphere_area(params.n);
                        LineForm {
                            num,
                            den: transport_poly(params, j),
                            p,
                            r: q,
                            prefactor: omega.powf(1.0 - p / q),
                        }
                    }
                    (Some(j), None) => form(num, transport_poly(params, j), p),
                    _ => form(num, id, p),
                }
            }
        })
    }

    /// The closed-form infimum where one is known.
    pub fn closed_form(&self) -> Option<f64> {
        let p = self.p();
        match self {
            Self::Mp { lambda, .. } => Some(lambda.abs().powf(p)),
            Self::Ip { gamma, .. } => Some(gamma.abs().powf(p)),
            Self::Jp { a, gamma, h, .. } => {
                if *gamma == 0.0 && *h == 0.0 {
                    Some((2.0 * a).abs().powf(p))
                } else if (h * h + 2.0 * a * h - gamma).abs() < 1e-12 && *h != 0.0 {
                    Some((gamma / h).abs().powf(p))
                } else {
                    None
                }
            }
            Self::MChain { chain, .. } => {
                let lam = match chain.first_order {
                    Some(FirstOrder::Lambda(l)) => l.abs().powf(p),
                    Some(FirstOrder::H(h)) => h.abs().powf(p),
                    None => 1.0,
                };
                Some(lam * chain.gamma.iter().map(|g| g.abs().powf(p)).product::<f64>())
            }
            Self::Hardy1d { a, .. } => Some(hardy_1d_constant(*a, p)),
            Self::RellichNd { params } if params.q.is_none() => match params.j {
                Some(_) => params.intermediate_constant().ok().map(|c| c.value),
                None => Some(params.rellich_constant().value),
            },
            Self::Mpq { lambda, .. } if *lambda == 0.0 => Some(0.0),
            Self::Ipq { gamma, .. } if *gamma == 0.0 => Some(0.0),
            Self::Jpq { a, gamma, h, .. } if *gamma == 0.0 && (*h + 2.0 * a).abs() < 1e-14 => {
                Some(0.0)
            }
            _ => None,
        }
    }

    /// Kinds whose infimum is zero.
    pub fn degenerate(&self) -> bool {
        matches!(self.closed_form(), Some(v) if v == 0.0)
    }

    /// Whether the infimum is expected to be attained.
    pub fn attained(&self) -> bool {
        if self.degenerate() {
            return false;
        }
        match self {
            Self::Mpq { .. } | Self::Ipq { .. } => true,
            Self::Jpq { a, gamma, h, .. } => !(*gamma == 0.0 && *h == 0.0 && *a != 0.0),
            Self::RellichNd { params } => params.q.is_some(),
            _ => false,
        }
    }

    /// Decay rate used to seed the minimizer.
    pub fn decay_rate(&self) -> f64 {
        let rates: Vec<f64> = match self {
            Self::Mp { lambda, .. } | Self::Mpq { lambda, .. } => vec![lambda.abs()],
            Self::Ip { a, gamma, .. } | Self::Ipq { a, gamma, .. } => {
                vec![(a * a + gamma).max(0.0).sqrt()]
            }
            Self::Jp { a, gamma, h, .. } | Self::Jpq { a, gamma, h, .. } => {
                let mut v = vec![h.abs(), (a * a + gamma).max(0.0).sqrt()];
                if *h != 0.0 {
                    v.push((gamma / h).abs());
                }
                v
            }
            Self::Hardy1d { a, p } => vec![((a + 1.0 - p) / p).abs()],
            Self::MChain { chain, .. } => chain
                .a
                .iter()
                .zip(&chain.gamma)
                .map(|(a, g)| (a * a + g).max(0.0).sqrt())
                .collect(),
            Self::RellichNd { params } => vec![params.hardy_h().abs()],
        };
        let r = rates
            .into_iter()
            .filter(|r| *r > 1e-8)
            .fold(f64::INFINITY, f64::min);
        if r.is_finite() {
            r
        } else {
            1.0
        }
    }
}

/// Quotient of a smooth line function by adaptive quadrature.
///
/// `RellichNd` is evaluated on `R^n`: both integrals are radial integrals of `T_k g`.
pub fn quotient_line(
    spec: &QuotientSpec,
    g: Arc<dyn LineFunction>,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if let QuotientSpec::RellichNd { params } = spec {
        return quotient_rellich_nd(params, g, cfg);
    }
    let form = spec.line_form()?;
    let num = Applied {
        inner: g.clone(),
        op: form.num.clone(),
    };
    let den = Applied {
        inner: g.clone(),
        op: form.den.clone(),
    };
    if g.k_max() < form.num.degree().max(form.den.degree()) {
        return Err(HrlError::OrderTooHigh {
            requested: form.num.degree(),
            available: g.k_max(),
        });
    }
    let decay = g.decay();
    let n = integrate_line(|s| num.value(s).abs().powf(form.p), decay, cfg)?.value;
    let d = integrate_line(|s| den.value(s).abs().powf(form.r), decay, cfg)?.value;
    if d == 0.0 {
        return Err(HrlError::ZeroDenominator);
    }
    Ok(form.prefactor * n / d.powf(form.p / form.r))
}

/// `int r^{n-1+a} |f|^e dr` for a scaled radial jet family, integrated in `s`.
fn radial_integral<F: Fn(f64) -> RadialJet>(
    jet: F,
    n: f64,
    a: f64,
    e: f64,
    decay: Decay,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    Ok(integrate_line(
        |s| {
            let j = jet(s);
            // r^{n+a} |r^{-e_j} v|^e with r = e^{-s}
            let w = n + a - j.e * e;
            (-s * w).exp() * j.v[0].abs().powf(e)
        },
        decay,
        cfg,
    )?
    .value)
}

fn quotient_rellich_nd(
    params: &ProblemParams,
    g: Arc<dyn LineFunction>,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let k = params.k;
    if g.k_max() < k as usize {
        return Err(HrlError::OrderTooHigh {
            requested: k as usize,
            available: g.k_max(),
        });
    }
    let n = params.n;
    let nf = params.nf();
    let p = params.p;
    let alpha = params.alpha;
    let u = EmdenFowler {
        g: g.clone(),
        e: params.h_shift(k as i32),
    };
    let decay = g.decay();
    let omega = crate::emden_fowler::sphere_area(n);
    let num = omega * radial_integral(|s| u.scaled_jet(s).grad_k(n, k), nf, alpha, p, decay, cfg)?;
    let den = match (params.j, params.q) {
        (Some(j), Some(q)) => {
            let beta = params.beta_exponent(k - j)?;
            let d = omega
                * radial_integral(|s| u.scaled_jet(s).grad_k(n, j), nf, -beta, q, decay, cfg)?;
            d.powf(p / q)
        }
        (Some(j), None) => {
            let w = alpha - (k - j) as f64 * p;
            omega * radial_integral(|s| u.scaled_jet(s).grad_k(n, j), nf, w, p, decay, cfg)?
        }
        _ => {
            let w = alpha - k as f64 * p;
            omega * radial_integral(|s| u.scaled_jet(s), nf, w, p, decay, cfg)?
        }
    };
    if den == 0.0 {
        return Err(HrlError::ZeroDenominator);
    }
    Ok(num / den)
}

/// A constant-coefficient operator discretized on a grid.
///
/// Rows are `out[i] = sum_k kernel[k] g[i + k]` for window starts `i` in `0..rows`.
/// First-order operators sit at midpoints; higher orders use central stencils at nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOp {
    pub kernel: Vec<f64>,
    pub rows: usize,
}

const CENTRAL: [&[f64]; 5] = [
    &[1.0],
    &[-0.5, 0.0, 0.5],
    &[1.0, -2.0, 1.0],
    &[-0.5, 1.0, 0.0, -1.0, 0.5],
    &[1.0, -4.0, 6.0, -4.0, 1.0],
];

impl DiscreteOp {
    pub fn new(poly: &DiffPoly, grid: &Grid) -> Result<Self> {
        let h = grid.h();
        let deg = poly.degree();
        if deg > 4 {
            return Err(HrlError::OrderTooHigh {
                requested: deg,
                available: 4,
            });
        }
        if deg == 1 {
            let (c0, c1) = (poly.0[0], poly.0[1]);
            return Ok(Self {
                kernel: vec![-c1 / h + 0.5 * c0, c1 / h + 0.5 * c0],
                rows: grid.n - 1,
            });
        }
        let half = if deg <= 2 { deg.min(1) } else { 2 };
        let width = 2 * half + 1;
        let mut kernel = vec![0.0; width];
        for (j, c) in poly.0.iter().enumerate() {
            let st = CENTRAL[j];
            let off = half - st.len() / 2;
            for (k, w) in st.iter().enumerate() {
                kernel[off + k] += c * w / h.powi(j as i32);
            }
        }
        if grid.n < width {
            return Err(invalid("grid.n", "grid too small for the stencil"));
        }
        Ok(Self {
            kernel,
            rows: grid.n + 1 - width,
        })
    }

    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                self.kernel
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * g[i + k])
                    .sum()
            })
            .collect()
    }

    /// Adjoint: `out[m] = sum_i kernel[m - i] w[i]`.
    pub fn adjoint(&self, w: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (i, wi) in w.iter().enumerate() {
            for (k, c) in self.kernel.iter().enumerate() {
                out[i + k] += c * wi;
            }
        }
        out
    }
}

/// The discretized quotient `h sum |N g|^p / (h sum |Dn g|^r)^{p/r}`.
#[derive(Debug, Clone)]
pub struct GridQuotient {
    pub num: DiscreteOp,
    pub den: DiscreteOp,
    pub p: f64,
    pub r: f64,
    pub h: f64,
    pub prefactor: f64,
    pub n: usize,
    /// Order of the numerator operator.
    pub order: usize,
}

struct Parts {
    num: f64,
    den: f64,
    gnum: Vec<f64>,
    gden: Vec<f64>,
}

impl GridQuotient {
    pub fn new(spec: &QuotientSpec, grid: &Grid) -> Result<Self> {
        let form = spec.line_form()?;
        Ok(Self {
            num: DiscreteOp::new(&form.num, grid)?,
            den: DiscreteOp::new(&form.den, grid)?,
            p: form.p,
            r: form.r,
            h: grid.h(),
            prefactor: form.prefactor,
            n: grid.n,
            order: form.num.degree(),
        })
    }

    /// `(numerator, denominator integral)` with exact `|t|^p`.
    pub fn parts(&self, g: &[f64]) -> (f64, f64) {
        let num = self.h
            * self
                .num
                .apply(g)
                .iter()
                .map(|v| v.abs().powf(self.p))
                .sum::<f64>();
        let den = self.h
            * self
                .den
                .apply(g)
                .iter()
                .map(|v| v.abs().powf(self.r))
                .sum::<f64>();
        (num, den)
    }

    pub fn value(&self, g: &[f64]) -> Result<f64> {
        let (n, d) = self.parts(g);
        if d == 0.0 {
            return Err(HrlError::ZeroDenominator);
        }
        Ok(self.prefactor * n / d.powf(self.p / self.r))
    }

    fn smooth_abs(t: f64, e: f64, delta: f64) -> f64 {
        if delta == 0.0 {
            t.abs().powf(e)
        } else {
            (t * t + delta * delta).powf(0.5 * e)
        }
    }

    fn smooth_parts(&self, g: &[f64], delta: f64, with_grad: bool) -> Parts {
        let ng = self.num.apply(g);
        let dg = self.den.apply(g);
        let dn = if self.p < 2.0 { delta } else { 0.0 };
        let dd = if self.r < 2.0 { delta } else { 0.0 };
        let num = self.h
            * ng.iter()
                .map(|v| Self::smooth_abs(*v, self.p, dn))
                .sum::<f64>();
        let den = self.h
            * dg.iter()
                .map(|v| Self::smooth_abs(*v, self.r, dd))
                .sum::<f64>();
        if !with_grad {
            return Parts {
                num,
                den,
                gnum: Vec::new(),
                gden: Vec::new(),
            };
        }
        let sp = |t: f64, e: f64, d: f64| {
            if d == 0.0 {
                spow(t, e)
            } else {
                spow_smooth(t, e, d)
            }
        };
        let wn: Vec<f64> = ng
            .iter()
            .map(|v| self.h * self.p * sp(*v, self.p, dn))
            .collect();
        let wd: Vec<f64> = dg
            .iter()
            .map(|v| self.h * self.r * sp(*v, self.r, dd))
            .collect();
        Parts {
            num,
            den,
            gnum: self.num.adjoint(&wn, self.n),
            gden: self.den.adjoint(&wd, self.n),
        }
    }

    /// Smoothed objective (without prefactor) and its gradient; boundary entries are zeroed.
    fn objective(&self, g: &[f64], delta: f64) -> (f64, Vec<f64>) {
        let pt = self.smooth_parts(g, delta, true);
        let e = self.p / self.r;
        let dpow = pt.den.powf(e);
        let q = pt.num / dpow;
        let mut grad: Vec<f64> = pt
            .gnum
            .iter()
            .zip(&pt.gden)
            .map(|(a, b)| a / dpow - q * e * b / pt.den)
            .collect();
        grad[0] = 0.0;
        let last = grad.len() - 1;
        grad[last] = 0.0;
        (q, grad)
    }

    fn objective_value(&self, g: &[f64], delta: f64) -> f64 {
        let pt = self.smooth_parts(g, delta, false);
        pt.num / pt.den.powf(self.p / self.r)
    }
}

/// Quotient of a grid function.
pub fn quotient_grid(spec: &QuotientSpec, g: &GridFunction) -> Result<f64> {
    GridQuotient::new(spec, &g.grid)?.value(&g.values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub grid: Grid,
    pub max_iter: usize,
    /// Relative change of the quotient over `window` iterations that counts as converged.
    pub tol: f64,
    pub window: usize,
    pub recenter_every: usize,
    /// Smoothing scale relative to the profile's peak.
    pub smoothing: f64,
    /// Extra passes with the smoothing annealed by 0.1 each.
    pub restarts: usize,
    pub armijo: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            grid: Grid::default(),
            max_iter: 20_000,
            tol: 1e-9,
            window: 50,
            recenter_every: 100,
            smoothing: 1e-8,
            restarts: 1,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub value: f64,
    pub minimizer: GridFunction,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
    /// The infimum is known not to be attained; `value` is only an upper bound.
    pub not_attained: bool,
    /// The infimum is zero.
    pub degenerate: bool,
}

/// `sech(mu s)` seed for the minimizer.
pub fn sech_init(grid: Grid, mu: f64) -> GridFunction {
    GridFunction::sample(grid, |s| 1.0 / (mu * s).cosh())
}

// Preconditioner (1 - D_h^2 / mu^2)^m on the interior, Dirichlet ends.
struct Precond {
    m: usize,
    off: f64,
    diag: f64,
}

impl Precond {
    fn new(h: f64, mu: f64, m: usize) -> Self {
        let c = 1.0 / (mu * mu * h * h);
        Self {
            m,
            off: -c,
            diag: 1.0 + 2.0 * c,
        }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut x = rhs.to_vec();
        if n < 3 {
            return x;
        }
        for _ in 0..self.m {
            // Thomas algorithm on the interior rows 1..n-1
            let m = n - 2;
            let mut cp = vec![0.0; m];
            let mut dp = vec![0.0; m];
            for i in 0..m {
                let b = self.diag - if i > 0 { self.off * cp[i - 1] } else { 0.0 };
                cp[i] = self.off / b;
                dp[i] = (x[i + 1] - if i > 0 { self.off * dp[i - 1] } else { 0.0 }) / b;
            }
            let mut y = vec![0.0; n];
            for i in (0..m).rev() {
                y[i + 1] = dp[i] - if i + 1 < m { cp[i] * y[i + 2] } else { 0.0 };
            }
            x = y;
        }
        x
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let mut x = v.to_vec();
        for _ in 0..self.m {
            let mut y = vec![0.0; n];
            for i in 1..n.saturating_sub(1) {
                let left = if i > 1 { x[i - 1] } else { 0.0 };
                let right = if i + 2 < n { x[i + 1] } else { 0.0 };
                y[i] = self.diag * x[i] + self.off * (left + right);
            }
            x = y;
        }
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned projected gradient descent on `{denominator = 1}`.
///
/// Each step takes a Barzilai–Borwein trial length in the preconditioned metric, backtracks
/// until the Armijo condition holds, then rescales to unit denominator.
pub fn minimize(
    spec: &QuotientSpec,
    init: Option<GridFunction>,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    let grid = opts.grid;
    let gq = GridQuotient::new(spec, &grid)?;
    let degenerate = spec.degenerate();
    let not_attained = !spec.attained();
    let mu = spec.decay_rate();
    let mut g = match init {
        Some(f) => {
            if f.grid != grid {
                return Err(invalid(
                    "init",
                    "initial function lives on a different grid",
                ));
            }
            f.values
        }
        None => sech_init(grid, mu).values,
    };
    let pre = Precond::new(grid.h(), mu.max(0.05), gq.order.max(1));
    let normalize = |g: &mut Vec<f64>| -> Result<()> {
        let (_, d) = gq.parts(g);
        if !(d > 0.0) || !d.is_finite() {
            return Err(HrlError::Diverged("denominator vanished".into()));
        }
        let c = d.powf(-1.0 / gq.r);
        g.iter_mut().for_each(|v| *v *= c);
        Ok(())
    };
    normalize(&mut g)?;
    let max_iter = if degenerate {
        opts.max_iter.min(2000)
    } else {
        opts.max_iter
    };
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut delta_rel = opts.smoothing;
    for pass in 0..=opts.restarts {
        let peak = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let delta = delta_rel * peak.max(1e-300);
        let (mut q, mut grad) = gq.objective(&g, delta);
        let mut dir = pre.solve(&grad);
        let mut step = 1.0;
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        let start = history.len();
        history.push(q);
        converged = false;
        while iterations < max_iter {
            iterations += 1;
            if let Some((g_old, grad_old)) = prev.take() {
                let s: Vec<f64> = g.iter().zip(&g_old).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = grad.iter().zip(&grad_old).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 0.0 {
                    step = dot(&s, &pre.apply(&s)) / sy;
                } else {
                    step *= 2.0;
                }
            }
            let slope = dot(&grad, &dir);
            if !(slope > 0.0) {
                converged = true;
                break;
            }
            let mut accepted = None;
            let mut t = step;
            for _ in 0..60 {
                let trial: Vec<f64> = g.iter().zip(&dir).map(|(a, d)| a - t * d).collect();
                let qt = gq.objective_value(&trial, delta);
                if qt.is_finite() && qt <= q - opts.armijo * t * slope {
                    accepted = Some((trial, qt));
                    break;
                }
                t *= 0.5;
            }
            let Some((mut trial, _)) = accepted else {
                converged = true;
                break;
            };
            step = t;
            normalize(&mut trial)?;
            let g_old = std::mem::replace(&mut g, trial);
            let grad_old = grad;
            if opts.recenter_every > 0 && iterations % opts.recenter_every == 0 {
                let cur = GridFunction {
                    grid,
                    values: g.clone(),
                };
                let shift = cur.argmax_abs() as isize - grid.center() as isize;
                if shift != 0 {
                    g = cur.shifted(shift).values;
                    normalize(&mut g)?;
                }
                prev = None;
            } else {
                prev = Some((g_old, grad_old));
            }
            let (qn, gn) = gq.objective(&g, delta);
            q = qn;
            grad = gn;
            dir = pre.solve(&grad);
            history.push(q);
            let len = history.len();
            if len - start > opts.window {
                let old = history[len - 1 - opts.window];
                if ((old - q) / q.abs().max(1e-300)).abs() < opts.tol {
                    converged = true;
                    break;
                }
            }
            if !q.is_finite() {
                return Err(HrlError::Diverged(format!("quotient became {q}")));
            }
        }
        if pass < opts.restarts {
            delta_rel *= 0.1;
        }
        if iterations >= max_iter {
            break;
        }
    }
    let minimizer = GridFunction { grid, values: g };
    let value = gq.value(&minimizer.values)?;
    Ok(MinimizeResult {
        value,
        minimizer,
        iterations,
        converged,
        history: history.iter().map(|v| v * gq.prefactor).collect(),
        not_attained,
        degenerate,
    })
}

/// The epsilon-rescaled families from the sharpness arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyKind {
    /// `u_eps = T_k(g(eps .))` in the order-`k` radial quotient on `R^n`.
    Rellich { params: ProblemParams },
    /// `g_eps(s) = g(eps s)` in a line quotient.
    Line { spec: QuotientSpec },
    /// `v_eps(r) = r^{2-(1+tau)/p} v(r^eps)` in the first (`second = false`) or second
    /// half-line inequality with parameters `(tau, lambda, p)`.
    HalfLine {
        tau: f64,
        lambda: f64,
        p: f64,
        second: bool,
    },
}

/// Quotients of the rescaled family at each `eps`.
pub fn sharpness_family(
    kind: &FamilyKind,
    base: Arc<dyn LineFunction>,
    epsilons: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    epsilons
        .iter()
        .map(|&eps| {
            let g: Arc<dyn LineFunction> = Arc::new(Rescaled::new(base.clone(), eps)?);
            // the support grows like 1/eps, so tighten the absolute tolerance with it
            let c = cfg.scaled(eps.min(1.0));
            match kind {
                FamilyKind::Rellich { params } => quotient_rellich_nd(
                    &ProblemParams {
                        j: None,
                        q: None,
                        ..*params
                    },
                    g,
                    &c,
                ),
                FamilyKind::Line { spec } => quotient_line(spec, g, &c),
                FamilyKind::HalfLine {
                    tau,
                    lambda,
                    p,
                    second,
                } => half_line_quotient(*tau, *lambda, *p, *second, g, (1.0 + tau) / p - 2.0, &c),
            }
        })
        .collect()
}

/// `int r^tau |v'' + (lambda-1) v'/r|^p / int r^{tau-p}|v'|^p` (or `r^{tau-2p}|v|^p`) for
/// `v = r^{-e} g(-ln r)`.
fn half_line_quotient(
    tau: f64,
    lambda: f64,
    p: f64,
    second: bool,
    g: Arc<dyn LineFunction>,
    e: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let (lhs, rhs) = half_line_sides(tau, lambda, p, second, g, e, cfg)?;
    if rhs == 0.0 {
        return Err(HrlError::ZeroDenominator);
    }
    Ok(lhs / rhs)
}

fn half_line_sides(
    tau: f64,
    lambda: f64,
    p: f64,
    second: bool,
    g: Arc<dyn LineFunction>,
    e: f64,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    let decay = g.decay();
    let jet = |s: f64| RadialJet::from_line(&g.derivatives(s), e, 2);
    // dr = r ds, and r^{e+j} v^{(j)} = jet.v[j]
    let lhs = integrate_line(
        |s| {
            let j = jet(s);
            let w = tau + 1.0 - (e + 2.0) * p;
            (-s * w).exp() * (j.v[2] + (lambda - 1.0) * j.v[1]).abs().powf(p)
        },
        decay,
        cfg,
    )?
    .value;
    let rhs = integrate_line(
        |s| {
            let j = jet(s);
            if second {
                let w = tau - 2.0 * p + 1.0 - e * p;
                (-s * w).exp() * j.v[0].abs().powf(p)
            } else {
                let w = tau - p + 1.0 - (e + 1.0) * p;
                (-s * w).exp() * j.v[1].abs().powf(p)
            }
        },
        decay,
        cfg,
    )?
    .value;
    Ok((lhs, rhs))
}

/// An inequality to check on random test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "inequality", rename_all = "snake_case")]
pub enum Inequality {
    /// Order `k` against `|x|^{alpha-kp}|u|^p`; `k = 1` is the weighted Hardy inequality.
    Rellich { params: ProblemParams },
    /// Order `k` against order `j` with weight `|x|^{alpha-(k-j)p}`.
    Intermediate { params: ProblemParams },
    /// `int r^a |w'|^p >= |(a+1-p)/p|^p int r^{a-p}|w|^p` on the half-line.
    HalfLineHardy { a: f64, p: f64 },
    /// The two second-order half-line inequalities.
    HalfLine {
        tau: f64,
        lambda: f64,
        p: f64,
        second: bool,
    },
}

impl Inequality {
    pub fn constant(&self) -> Result<f64> {
        Ok(match self {
            Self::Rellich { params } => params.rellich_constant().value,
            Self::Intermediate { params } => params.intermediate_constant()?.value,
            Self::HalfLineHardy { a, p } => hardy_1d_constant(*a, *p),
            Self::HalfLine {
                tau,
                lambda,
                p,
                second,
            } => {
                let (c1, c2) = half_line_constants(*tau, *lambda, *p)?;
                if *second {
                    c2
                } else {
                    c1
                }
            }
        })
    }

    /// Exponent that makes `r^{-e} g(-ln r)` the natural transport for this inequality.
    fn natural_exponent(&self) -> f64 {
        match self {
            Self::Rellich { params } | Self::Intermediate { params } => {
                params.h_shift(params.k as i32)
            }
            Self::HalfLineHardy { a, p } => (a + 1.0 - p) / p,
            Self::HalfLine { tau, p, .. } => (1.0 + tau) / p - 2.0,
        }
    }

    /// `(lhs, rhs)` for `u = r^{-e} g(-ln r)`.
    pub fn sides(
        &self,
        g: Arc<dyn LineFunction>,
        e: f64,
        cfg: &QuadratureConfig,
    ) -> Result<(f64, f64)> {
        let decay = g.decay();
        match self {
            Self::Rellich { params } | Self::Intermediate { params } => {
                let k = params.k;
                let n = params.n;
                let nf = params.nf();
                let p = params.p;
                let u = EmdenFowler { g: g.clone(), e };
                let lhs = radial_integral(
                    |s| u.scaled_jet(s).grad_k(n, k),
                    nf,
                    params.alpha,
                    p,
                    decay,
                    cfg,
                )?;
                let j = match self {
                    Self::Intermediate { .. } => params
                        .j
                        .ok_or_else(|| invalid("j", "intermediate order is required"))?,
                    _ => 0,
                };
                let w = params.alpha - (k - j) as f64 * p;
                let rhs = radial_integral(|s| u.scaled_jet(s).grad_k(n, j), nf, w, p, decay, cfg)?;
                Ok((lhs, rhs))
            }
            Self::HalfLineHardy { a, p } => {
                let jet = |s: f64| RadialJet::from_line(&g.derivatives(s), e, 1);
                let lhs = integrate_line(
                    |s| {
                        let j = jet(s);
                        (-s * (a + 1.0 - (e + 1.0) * p)).exp() * j.v[1].abs().powf(*p)
                    },
                    decay,
                    cfg,
                )?
                .value;
                let rhs = integrate_line(
                    |s| {
                        let j = jet(s);
                        (-s * (a - p + 1.0 - e * p)).exp() * j.v[0].abs().powf(*p)
                    },
                    decay,
                    cfg,
                )?
                .value;
                Ok((lhs, rhs))
            }
            Self::HalfLine {
                tau,
                lambda,
                p,
                second,
            } => half_line_sides(*tau, *lambda, *p, *second, g, e, cfg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub constant: f64,
    pub samples: usize,
    pub violations: usize,
    /// Smallest observed `lhs / rhs`.
    pub min_quotient: f64,
    pub seed: u64,
}

/// A random test function: `P(s) exp(-(s-s0)^2/sigma^2)` with `deg P <= 4`, coefficients in
/// `[-1, 1]`, `s0 in [-3, 3]`, `sigma in [0.5, 2]`; every fourth draw is a bump instead.
pub fn random_test_function(rng: &mut ChaCha8Rng, index: usize) -> Arc<dyn LineFunction> {
    let s0 = rng.gen_range(-3.0..=3.0);
    let sigma = rng.gen_range(0.5..=2.0);
    if index % 4 == 3 {
        return Arc::new(Bump {
            center: s0,
            half_width: 2.0 * sigma,
            amp: rng.gen_range(0.5..=1.5),
        });
    }
    let deg = rng.gen_range(0..=4);
    let coeffs: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    Arc::new(GaussPoly { coeffs, s0, sigma })
}

/// Checks `lhs >= constant * rhs * (1 - 1e-6)` on `samples` seeded random test functions.
///
/// Each test function is transported with the natural exponent shifted by a random amount in
/// `[-0.5, 0.5]`, so the weights do not cancel identically.
pub fn verify_inequality(
    ineq: &Inequality,
    samples: usize,
    seed: u64,
    cfg: &QuadratureConfig,
) -> Result<InequalityReport> {
    let constant = ineq.constant()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut min_quotient = f64::INFINITY;
    let e0 = ineq.natural_exponent();
    for i in 0..samples {
        let g = random_test_function(&mut rng, i);
        let e = e0 + rng.gen_range(-0.5..=0.5);
        let (lhs, rhs) = ineq.sides(g, e, cfg)?;
        if rhs <= 0.0 {
            continue;
        }
        let q = lhs / rhs;
        min_quotient = min_quotient.min(q);
        if lhs < constant * rhs * (1.0 - 1e-6) {
            violations += 1;
        }
    }
    Ok(InequalityReport {
        constant,
        samples,
        violations,
        min_quotient,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevReport {
    /// Line infimum from the grid minimizer.
    pub line_value: f64,
    /// `omega_n^{(q-p)/q}`
    pub omega_factor: f64,
    /// `omega_factor * line_value`
    pub value: f64,
    pub q: f64,
    pub result: MinimizeResult,
}

/// Unweighted radial Sobolev constant of order `k` against order `j` at the critical exponent.
pub fn sobolev_constants(params: &ProblemParams, opts: &MinimizeOptions) -> Result<SobolevReport> {
    let j = params.j.unwrap_or(0);
    if j >= params.k {
        return Err(invalid("j", "need j < k"));
    }
    let order = params.k - j;
    let q = params.critical_exponent(order)?;
    let mut pr = ProblemParams {
        alpha: 0.0,
        j: Some(j),
        q: Some(q),
        ..*params
    };
    pr.validate()?;
    pr.alpha = 0.0;
    let spec = QuotientSpec::RellichNd { params: pr };
    let form = spec.line_form()?;
    let result = minimize(&spec, None, opts)?;
    let line_value = result.value / form.prefactor;
    Ok(SobolevReport {
        line_value,
        omega_factor: form.prefactor,
        value: result.value,
        q,
        result,
    })
}
