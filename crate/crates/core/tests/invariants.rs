use std::sync::Arc;

use hrl_core::emden_fowler::{EmdenFowler, GaussPoly, LineFunction, RadialJet, Translated};
use hrl_core::numerics::QuadratureConfig;
use hrl_core::residuals::hle_system_check;
use hrl_core::variational::{quotient_line, QuotientSpec};
use hrl_core::ProblemParams;
use proptest::prelude::*;

fn params(k: u32) -> impl Strategy<Value = ProblemParams> {
    (2u32..10, 1.05f64..5.0, -8.0f64..8.0)
        .prop_map(move |(n, p, a)| ProblemParams::new(n, p, a, k).unwrap())
}

fn close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.max(1.0)
}

proptest! {
    #[test]
    fn second_order_pair(pr in params(2)) {
        let (a, g, h) = (pr.a_h(2), pr.gamma_h(2), pr.h_shift(2));
        let half = 0.5 * (pr.nf() - 2.0);
        prop_assert!(close(a * a + g, half * half, a * a + g.abs(), 1e-12));
        prop_assert!(close(h * h + 2.0 * a * h, g, h * h + (a * h).abs(), 1e-12));
    }

    #[test]
    fn gamma_shift(pr in params(2), m in 1i32..4, h in 1i32..4) {
        let low = ProblemParams::new(pr.n, pr.p, pr.alpha - 2.0 * m as f64 * pr.p, 2).unwrap();
        let (x, y) = (low.gamma_h(2), pr.gamma_h(2 * m + 2));
        prop_assert!(close(x, y, x.abs(), 1e-12));
        let low = ProblemParams::new(pr.n, pr.p, pr.alpha - pr.p, 2).unwrap();
        let (x, y) = (low.gamma_h(2 * h), pr.gamma_h(2 * h + 1));
        prop_assert!(close(x, y, x.abs(), 1e-12));
    }

    #[test]
    fn gamma_products(pr in params(2), m in 1i32..4) {
        let low = ProblemParams::new(pr.n, pr.p, pr.alpha - 2.0 * m as f64 * pr.p, 2).unwrap();
        let lhs = low.gamma_h(2).abs() * (1..=m).map(|h| pr.gamma_h(2 * h).abs()).product::<f64>();
        let rhs: f64 = (1..=m + 1).map(|h| pr.gamma_h(2 * h).abs()).product();
        prop_assert!(close(lhs, rhs, rhs, 1e-11));
    }

    #[test]
    fn index_shift(pr in params(4), j in 1u32..4, dq in 0.1f64..4.0, h in 0i32..4) {
        let ps = pr.with_j(j).unwrap().with_q(pr.p + dq).unwrap();
        let a = ps.index_shift_h(h).unwrap();
        let b = ps.h_shift((4 - j) as i32 + h);
        prop_assert!(close(a, b, a.abs(), 1e-12));
    }

    #[test]
    fn critical_hyperbola(pr in params(2), dq in 0.1f64..4.0) {
        let r = hle_system_check(&pr.with_q(pr.p + dq).unwrap()).unwrap();
        prop_assert!(r.hyperbola_relative <= 1e-12);
    }

    #[test]
    fn hardy_constant_closed_form(pr in params(1)) {
        let want = pr.hardy_h().abs().powf(pr.p);
        let got = pr.rellich_constant().value;
        prop_assert!(close(got, want, want, 1e-14));
    }

    #[test]
    fn constant_is_product_of_factors(pr in params(3)) {
        let c = pr.rellich_constant();
        let prod: f64 = c.factors.iter().product();
        prop_assert!(close(c.value, prod, prod, 1e-14));
        prop_assert_eq!(c.degenerate, !pr.positivity_check().positive);
    }

    #[test]
    fn transform_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, s in -3.0f64..3.0, pr in params(3)) {
        let f = GaussPoly::new(vec![1.0, 0.5], 0.3, 1.0).unwrap();
        let g = GaussPoly::new(vec![0.2, 0.0, -0.4], -0.5, 1.3).unwrap();
        let (df, dg) = (f.derivatives(s), g.derivatives(s));
        let e = pr.h_shift(3);
        let uf = EmdenFowler { g: Arc::new(f), e }.scaled_jet(s).grad_k(pr.n, 3);
        let ug = EmdenFowler { g: Arc::new(g), e }.scaled_jet(s).grad_k(pr.n, 3);
        let mut d = df;
        for i in 0..d.len() {
            d[i] = a * df[i] + b * dg[i];
        }
        let usum = RadialJet::from_line(&d, e, 7).grad_k(pr.n, 3);
        let want = a * uf.v[0] + b * ug.v[0];
        prop_assert!(close(usum.v[0], want, uf.v[0].abs() + ug.v[0].abs(), 1e-10));
    }

    #[test]
    fn quotient_scaling_and_translation(c in 0.1f64..10.0, shift in -3.0f64..3.0, neg in any::<bool>()) {
        let cfg = QuadratureConfig::default();
        let spec = QuotientSpec::Jpq { p: 2.2, q: 3.5, a: 0.3, gamma: 0.9, h: -1.2 };
        let base = GaussPoly::new(vec![1.0, -0.3, 0.2], 0.1, 1.1).unwrap();
        let c = if neg { -c } else { c };
        let scaled = GaussPoly { coeffs: base.coeffs.iter().map(|x| c * x).collect(), ..base.clone() };
        let moved: Arc<dyn LineFunction> = Arc::new(Translated { inner: Arc::new(base.clone()), shift });
        let q0 = quotient_line(&spec, Arc::new(base), &cfg).unwrap();
        let q1 = quotient_line(&spec, Arc::new(scaled), &cfg).unwrap();
        let q2 = quotient_line(&spec, moved, &cfg).unwrap();
        prop_assert!(close(q0, q1, q0, 1e-9));
        prop_assert!(close(q0, q2, q0, 1e-8));
    }
}
