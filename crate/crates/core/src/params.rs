//! Problem parameters, closed-form constants, exponents and validity predicates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// The index tuple `(n, p, alpha, k, j, q)` of a weighted radial inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: u32,
    pub p: f64,
    pub alpha: f64,
    pub k: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

/// A constant that is a product of `|base|^p` factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub value: f64,
    /// `ln(value)`; `-inf` when degenerate.
    pub log_value: f64,
    pub degenerate: bool,
    /// The `|base|^p` factors; `value` is their product.
    pub factors: Vec<f64>,
    /// Signed bases before taking `|.|^p`, after snapping near-zero entries to zero.
    pub bases: Vec<f64>,
}

impl ConstantReport {
    fn from_bases(bases: Vec<f64>, p: f64, zero_tol: f64) -> Self {
        let bases: Vec<f64> = bases
            .into_iter()
            .map(|b| if b.abs() <= zero_tol { 0.0 } else { b })
            .collect();
        let factors: Vec<f64> = bases.iter().map(|b| b.abs().powf(p)).collect();
        let degenerate = bases.iter().any(|b| *b == 0.0);
        let value = factors.iter().product();
        let log_value = if degenerate {
            f64::NEG_INFINITY
        } else {
            bases.iter().map(|b| p * b.abs().ln()).sum()
        };
        Self {
            value,
            log_value,
            degenerate,
            factors,
            bases,
        }
    }
}

/// Result of [`ProblemParams::positivity_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Positivity {
    pub positive: bool,
    /// `(label, value)` of each vanishing factor, e.g. `("gamma_2", 0.0)`.
    pub offending: Vec<(String, f64)>,
}

impl ProblemParams {
    pub fn new(n: u32, p: f64, alpha: f64, k: u32) -> Result<Self> {
        let out = Self {
            n,
            p,
            alpha,
            k,
            j: None,
            q: None,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn with_j(mut self, j: u32) -> Result<Self> {
        self.j = Some(j);
        self.validate()?;
        Ok(self)
    }

    pub fn with_q(mut self, q: f64) -> Result<Self> {
        self.q = Some(q);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid(
                "n",
                format!("dimension must be >= 2, got {}", self.n),
            ));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(invalid(
                "p",
                format!("exponent must be > 1, got {}", self.p),
            ));
        }
        if !self.alpha.is_finite() {
            return Err(invalid("alpha", "weight power must be finite"));
        }
        if self.k < 1 {
            return Err(invalid("k", "derivative order must be >= 1"));
        }
        if let Some(j) = self.j {
            if j >= self.k {
                return Err(invalid(
                    "j",
                    format!("need 0 <= j <= k-1, got j={j}, k={}", self.k),
                ));
            }
        }
        if let Some(q) = self.q {
            if !(q > self.p) || !q.is_finite() {
                return Err(invalid("q", format!("need q > p, got q={q}, p={}", self.p)));
            }
        }
        Ok(())
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// `(n + alpha) / p`.
    pub fn ratio(&self) -> f64 {
        (self.nf() + self.alpha) / self.p
    }

    /// Conjugate exponent `p' = p / (p - 1)`.
    pub fn conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// Degeneracy threshold `1e-10 (1 + |n| + |alpha|)`.
    pub fn zero_tolerance(&self) -> f64 {
        1e-10 * (1.0 + self.nf() + self.alpha.abs())
    }

    /// Hardy exponent `H_alpha = (n + alpha)/p - 1`.
    pub fn hardy_h(&self) -> f64 {
        self.ratio() - 1.0
    }

    /// `gamma_{alpha,h} = ((n+alpha)/p - h)(n - 2 + h - (n+alpha)/p)`.
    pub fn gamma_h(&self, h: i32) -> f64 {
        let r = self.ratio();
        let h = h as f64;
        (r - h) * (self.nf() - 2.0 + h - r)
    }

    /// `H_{alpha,k} = (n + alpha)/p - k`.
    pub fn h_shift(&self, k: i32) -> f64 {
        self.ratio() - k as f64
    }

    /// `A_h = (n - 2)/2 - H_h`.
    pub fn a_h(&self, h: i32) -> f64 {
        0.5 * (self.nf() - 2.0) - self.h_shift(h)
    }

    /// Sharp constant in the order-`k` inequality with weights `|x|^alpha`, `|x|^{alpha-kp}`.
    pub fn rellich_constant(&self) -> ConstantReport {
        let m = (self.k / 2) as i32;
        let mut bases = Vec::new();
        if self.k % 2 == 0 {
            bases.extend((1..=m).map(|h| self.gamma_h(2 * h)));
        } else {
            bases.push(self.hardy_h());
            bases.extend((1..=m).map(|h| self.gamma_h(2 * h + 1)));
        }
        ConstantReport::from_bases(bases, self.p, self.zero_tolerance())
    }

    /// Sharp constant of the intermediate inequality between orders `k` and `j`,
    /// `1 <= j <= k-1`.
    pub fn intermediate_constant(&self) -> Result<ConstantReport> {
        let j = self
            .j
            .ok_or_else(|| invalid("j", "intermediate order is required"))?;
        if j < 1 || j >= self.k {
            return Err(invalid(
                "j",
                format!("need 1 <= j <= k-1, got j={j}, k={}", self.k),
            ));
        }
        let m = (self.k / 2) as i32;
        let i = (j / 2) as i32;
        let delta = self.nf() - 1.0 - self.ratio() + (self.k - j) as f64;
        let even_j = j % 2 == 0;
        // Product ranges: j = 2i needs i <= m, j = 2i+1 needs i <= m-1. Both follow from
        // j <= k-1, checked again here.
        let upper = if even_j { m - i } else { m - i - 1 };
        if upper < 0 {
            return Err(invalid("j", format!("index i={i} out of range for m={m}")));
        }
        let mut bases = Vec::new();
        if self.k % 2 == 0 {
            if !even_j {
                bases.push(delta);
            }
            bases.extend((1..=upper).map(|h| self.gamma_h(2 * h)));
        } else {
            bases.push(self.hardy_h());
            if !even_j {
                bases.push(delta);
            }
            bases.extend((1..=upper).map(|h| self.gamma_h(2 * h + 1)));
        }
        Ok(ConstantReport::from_bases(
            bases,
            self.p,
            self.zero_tolerance(),
        ))
    }

    /// `beta_{order,q} = n - q (n - order p + alpha) / p`.
    pub fn beta_exponent(&self, order: u32) -> Result<f64> {
        let q = self
            .q
            .ok_or_else(|| invalid("q", "exponent q is required"))?;
        Ok(self.nf() - q * (self.nf() - order as f64 * self.p + self.alpha) / self.p)
    }

    /// Critical exponent `n p / (n - order p)`; requires `n > order p`.
    pub fn critical_exponent(&self, order: u32) -> Result<f64> {
        let denom = self.nf() - order as f64 * self.p;
        if !(denom > 0.0) {
            return Err(invalid(
                "n",
                format!(
                    "critical exponent needs n > {order} p, got n={}, p={}",
                    self.n, self.p
                ),
            ));
        }
        Ok(self.nf() * self.p / denom)
    }

    /// Whether every factor of the sharp constant is nonzero.
    pub fn positivity_check(&self) -> Positivity {
        self.positivity_check_with(self.zero_tolerance())
    }

    pub fn positivity_check_with(&self, tol: f64) -> Positivity {
        let m = (self.k / 2) as i32;
        let mut labelled = Vec::new();
        if self.k % 2 == 0 {
            for h in 1..=m {
                labelled.push((format!("gamma_{}", 2 * h), self.gamma_h(2 * h)));
            }
        } else {
            labelled.push(("H_alpha".to_string(), self.hardy_h()));
            for h in 1..=m {
                labelled.push((format!("gamma_{}", 2 * h + 1), self.gamma_h(2 * h + 1)));
            }
        }
        let offending: Vec<(String, f64)> = labelled
            .into_iter()
            .filter(|(_, v)| v.abs() <= tol)
            .collect();
        Positivity {
            positive: offending.is_empty(),
            offending,
        }
    }

    /// `(n - beta_{k-j,q})/q - h`; equals `H_{k-j+h}`.
    pub fn index_shift_h(&self, h: i32) -> Result<f64> {
        let j = self
            .j
            .ok_or_else(|| invalid("j", "intermediate order is required"))?;
        let q = self
            .q
            .ok_or_else(|| invalid("q", "exponent q is required"))?;
        let beta = self.beta_exponent(self.k - j)?;
        Ok((self.nf() - beta) / q - h as f64)
    }
}

/// Non-radial second-order constant for `p = 2`: `min_i |gamma_{alpha,2} + i(n-2+i)|^2`.
pub fn nonradial_rellich_p2(n: u32, alpha: f64) -> Result<f64> {
    let params = ProblemParams::new(n, 2.0, alpha, 2)?;
    let gamma = params.gamma_h(2);
    let nf = n as f64;
    let bound = 2.0 * gamma.abs() + 1.0;
    let mut best = f64::INFINITY;
    let mut i = 0.0_f64;
    loop {
        let eig = i * (nf - 2.0 + i);
        best = best.min((gamma + eig).abs());
        if eig > bound {
            break;
        }
        i += 1.0;
    }
    Ok(best * best)
}

/// Sharp constants of the two one-dimensional second-order inequalities on the half-line:
/// `(|(tau+1-lambda p)/p|^p, |(tau+1-lambda p)(tau+1-2p)/p^2|^p)`.
pub fn half_line_constants(tau: f64, lambda: f64, p: f64) -> Result<(f64, f64)> {
    if !(p > 1.0) {
        return Err(invalid("p", "exponent must be > 1"));
    }
    let a = (tau + 1.0 - lambda * p) / p;
    let b = (tau + 1.0 - 2.0 * p) / p;
    Ok((a.abs().powf(p), (a * b).abs().powf(p)))
}

/// Hardy constant on the half-line for the weight `r^a`: `|(a + 1 - p)/p|^p`.
pub fn hardy_1d_constant(a: f64, p: f64) -> f64 {
    ((a + 1.0 - p) / p).abs().powf(p)
}
