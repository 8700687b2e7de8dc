//! Truncated Taylor series for exact derivative propagation through smooth formulas.
//!
//! A [`Jet`] holds the Taylor coefficients `f^(i)(x0) / i!` for `i < JET_LEN`.

use std::ops::{Add, Mul, Neg, Sub};

pub const JET_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub c: [f64; JET_LEN],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; JET_LEN];
        c[0] = v;
        Self { c }
    }

    /// The identity function expanded at `x0`.
    pub fn variable(x0: f64) -> Self {
        let mut c = [0.0; JET_LEN];
        c[0] = x0;
        c[1] = 1.0;
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Derivatives `f, f', ..., f^(JET_LEN-1)`.
    pub fn derivatives(&self) -> [f64; JET_LEN] {
        let mut out = self.c;
        let mut fact = 1.0;
        for (i, o) in out.iter_mut().enumerate().skip(1) {
            fact *= i as f64;
            *o *= fact;
        }
        out
    }

    pub fn scale(self, a: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|v| *v *= a);
        Self { c }
    }

    pub fn add_const(self, a: f64) -> Self {
        let mut c = self.c;
        c[0] += a;
        Self { c }
    }

    pub fn exp(self) -> Self {
        let mut b = [0.0; JET_LEN];
        b[0] = self.c[0].exp();
        for k in 1..JET_LEN {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.c[j] * b[k - j];
            }
            b[k] = acc / k as f64;
        }
        Self { c: b }
    }

    /// Natural log; requires a positive constant term.
    pub fn ln(self) -> Self {
        let a0 = self.c[0];
        let mut b = [0.0; JET_LEN];
        b[0] = a0.ln();
        for k in 1..JET_LEN {
            let mut acc = k as f64 * self.c[k];
            for j in 1..k {
                acc -= j as f64 * b[j] * self.c[k - j];
            }
            b[k] = acc / (k as f64 * a0);
        }
        Self { c: b }
    }

    pub fn recip(self) -> Self {
        let a0 = self.c[0];
        let mut b = [0.0; JET_LEN];
        b[0] = 1.0 / a0;
        for k in 1..JET_LEN {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += self.c[j] * b[k - j];
            }
            b[k] = -acc / a0;
        }
        Self { c: b }
    }

    /// `self^e` for a positive constant term.
    pub fn powf(self, e: f64) -> Self {
        let a0 = self.c[0];
        let mut b = [0.0; JET_LEN];
        b[0] = a0.powf(e);
        for k in 1..JET_LEN {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += (e * j as f64 - (k - j) as f64) * self.c[j] * b[k - j];
            }
            b[k] = acc / (k as f64 * a0);
        }
        Self { c: b }
    }

    pub fn powi(self, n: u32) -> Self {
        let mut out = Jet::constant(1.0);
        for _ in 0..n {
            out = out * self;
        }
        out
    }

    /// Jet of the derivative; the top coefficient is lost.
    pub fn derivative(&self) -> Self {
        let mut c = [0.0; JET_LEN];
        for i in 0..JET_LEN - 1 {
            c[i] = (i + 1) as f64 * self.c[i + 1];
        }
        Self { c }
    }

    /// `|x|^{p-2} x` for a nonzero constant term.
    pub fn spow(self, p: f64) -> Self {
        if self.c[0] >= 0.0 {
            self.powf(p - 1.0)
        } else {
            -(-self).powf(p - 1.0)
        }
    }

    /// `sinh` and `cosh` together.
    pub fn sinh_cosh(self) -> (Self, Self) {
        let e = self.exp();
        let m = (-self).exp();
        ((e - m).scale(0.5), (e + m).scale(0.5))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c.iter()) {
            *a += b;
        }
        Jet { c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c.iter()) {
            *a -= b;
        }
        Jet { c }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; JET_LEN];
        for k in 0..JET_LEN {
            let mut acc = 0.0;
            for j in 0..=k {
                acc += self.c[j] * o.c[k - j];
            }
            c[k] = acc;
        }
        Jet { c }
    }
}
