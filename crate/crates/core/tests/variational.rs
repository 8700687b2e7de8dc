use std::sync::Arc;

use hrl_core::emden_fowler::{Applied, Bump, DiffPoly, GaussPoly, LineFunction, OperatorChain};
use hrl_core::numerics::{Grid, QuadratureConfig};
use hrl_core::variational::{
    minimize, quotient_grid, quotient_line, sech_init, sharpness_family, sobolev_constants,
    FamilyKind, MinimizeOptions, QuotientSpec,
};
use hrl_core::ProblemParams;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

#[test]
fn mp_grid_infimum_decreases_towards_closed_form() {
    let spec = QuotientSpec::Mp {
        p: 2.0,
        lambda: 1.0,
    };
    let mut last = f64::INFINITY;
    for l in [5.0, 10.0, 20.0] {
        let opts = MinimizeOptions {
            grid: Grid::new(l, 801).unwrap(),
            max_iter: 3000,
            ..MinimizeOptions::default()
        };
        let r = minimize(&spec, None, &opts).unwrap();
        assert!(r.not_attained);
        assert!(r.value >= 1.0 - 1e-6, "{}", r.value);
        assert!(r.value < last, "{} !< {last}", r.value);
        last = r.value;
    }
    assert!(last < 1.1);
}

#[test]
fn ip_family_approaches_closed_form_from_above() {
    let spec = QuotientSpec::Ip {
        p: 2.0,
        a: 0.4,
        gamma: 1.5,
    };
    let c = spec.closed_form().unwrap();
    let v = sharpness_family(
        &FamilyKind::Line { spec },
        Arc::new(Bump::unit()),
        &[1.0, 0.1, 0.01, 0.001],
        &cfg(),
    )
    .unwrap();
    assert!(v.iter().all(|x| *x >= c));
    assert!((v[3] - c) / c < 0.05);
}

#[test]
fn closed_form_kinds_bound_grid_quotients() {
    let grid = Grid::new(15.0, 1501).unwrap();
    let g = sech_init(grid, 0.7);
    let chain = OperatorChain::new(
        vec![0.2],
        vec![1.1],
        Some(hrl_core::emden_fowler::FirstOrder::Lambda(0.6)),
    )
    .unwrap();
    let specs = [
        QuotientSpec::Mp {
            p: 2.5,
            lambda: -0.7,
        },
        QuotientSpec::Ip {
            p: 1.8,
            a: 0.3,
            gamma: 0.6,
        },
        QuotientSpec::Jp {
            p: 2.0,
            a: 0.75,
            gamma: 0.0,
            h: 0.0,
        },
        QuotientSpec::Jp {
            p: 3.0,
            a: 0.5,
            gamma: 2.0,
            h: 1.0,
        },
        QuotientSpec::MChain { p: 2.0, chain },
        QuotientSpec::Hardy1d { p: 3.0, a: 0.5 },
    ];
    for spec in specs {
        let c = spec.closed_form().unwrap();
        let v = quotient_grid(&spec, &g).unwrap();
        assert!(v >= c * (1.0 - 1e-3), "{}: {v} < {c}", spec.name());
    }
}

#[test]
fn second_order_sobolev_at_singular_weight_is_first_order_on_the_derivative() {
    // alpha = 2p - n: the line form is (D^2 - (n-2) D) g against D g
    let (n, p, q) = (5, 2.0, 3.0);
    let alpha = 2.0 * p - n as f64;
    let params = ProblemParams::new(n, p, alpha, 2)
        .unwrap()
        .with_j(1)
        .unwrap()
        .with_q(q)
        .unwrap();
    let nd = QuotientSpec::RellichNd { params };
    let prefactor = nd.line_form().unwrap().prefactor;
    let mpq = QuotientSpec::Mpq {
        p,
        q,
        lambda: n as f64 - 2.0,
    };
    for g in [
        GaussPoly::new(vec![1.0, 0.3], 0.0, 1.0).unwrap(),
        GaussPoly::new(vec![0.5, -1.0, 0.2], 0.7, 1.4).unwrap(),
    ] {
        let g: Arc<dyn LineFunction> = Arc::new(g);
        let a = quotient_line(&nd, g.clone(), &cfg()).unwrap() / prefactor;
        let dg: Arc<dyn LineFunction> = Arc::new(Applied {
            inner: g,
            op: DiffPoly(vec![0.0, 1.0]),
        });
        let b = quotient_line(&mpq, dg, &cfg()).unwrap();
        assert!(((a - b) / b).abs() < 1e-8, "{a} {b}");
    }
}

#[test]
fn second_order_sobolev_constant_is_positive() {
    let params = ProblemParams::new(5, 2.0, 0.0, 2)
        .unwrap()
        .with_j(1)
        .unwrap();
    let opts = MinimizeOptions {
        grid: Grid::new(25.0, 2001).unwrap(),
        ..MinimizeOptions::default()
    };
    let rep = sobolev_constants(&params, &opts).unwrap();
    assert!((rep.q - 10.0 / 3.0).abs() < 1e-14);
    assert!(rep.value > 0.0 && rep.result.converged);
    assert!(!rep.result.not_attained);
}

#[test]
fn critical_weight_exponent_vanishes() {
    let pr = ProblemParams::new(3, 2.0, 0.0, 1)
        .unwrap()
        .with_q(6.0)
        .unwrap();
    assert_eq!(pr.beta_exponent(1).unwrap(), 0.0);
}

#[test]
fn degenerate_spec_is_flagged() {
    let opts = MinimizeOptions {
        grid: Grid::new(10.0, 401).unwrap(),
        max_iter: 300,
        ..MinimizeOptions::default()
    };
    let r = minimize(
        &QuotientSpec::Ipq {
            p: 2.0,
            q: 4.0,
            a: 0.5,
            gamma: 0.0,
        },
        None,
        &opts,
    )
    .unwrap();
    assert!(r.degenerate && r.not_attained);
}
