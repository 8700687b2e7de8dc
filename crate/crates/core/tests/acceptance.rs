//! Acceptance criteria 1-8. One PASS/FAIL line per criterion; nonzero exit on any failure.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use hrl_core::closed_forms::{u2_profile, u_cor_profile, ExtremalF, ExtremalG};
use hrl_core::emden_fowler::{norm_identity, Bump, GaussPoly, LineFunction};
use hrl_core::numerics::{integrate_halfline, QuadratureConfig};
use hrl_core::residuals::{
    default_line_samples, hle_system_check, line_samples, log_samples, residual_f_system,
    residual_g_equation, residual_radial_biharmonic, utilde_phi_identity, BiharmonicMode,
};
use hrl_core::variational::{
    minimize, quotient_line, sharpness_family, sobolev_constants, verify_inequality, FamilyKind,
    Inequality, MinimizeOptions, QuotientSpec,
};
use hrl_core::ProblemParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<Vec<String>, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pp(n: u32, p: f64, alpha: f64, k: u32) -> ProblemParams {
    ProblemParams::new(n, p, alpha, k).expect("valid parameters")
}

fn random_params(rng: &mut ChaCha8Rng, k: u32) -> ProblemParams {
    let n = rng.gen_range(2..=9);
    let p = rng.gen_range(1.1..=4.0);
    let alpha = rng.gen_range(-6.0..=6.0);
    pp(n, p, alpha, k)
}

fn criterion_1() -> Outcome {
    let c52 = pp(5, 2.0, 0.0, 2).rellich_constant().value;
    ensure(
        c52 == 1.5625 && c52 == (5.0_f64 * 1.0 / 4.0).powi(2),
        || format!("c(5,2,0,2) = {c52}"),
    )?;
    let c42 = pp(4, 2.0, 0.0, 2).rellich_constant().value;
    ensure(c42 == 0.0, || format!("c(4,2,0,2) = {c42}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let pr = random_params(&mut rng, 1);
        let want = ((pr.nf() + pr.alpha) / pr.p - 1.0).abs().powf(pr.p);
        let got = pr.rellich_constant().value;
        if want != 0.0 {
            worst = worst.max(rel(got, want));
        }
    }
    ensure(worst <= 1e-14, || {
        format!("Hardy case relative error {worst:e}")
    })?;
    Ok(vec![format!(
        "c(5,2,0,2)={c52}, c(4,2,0,2)={c42}, Hardy max rel {worst:.1e}"
    )])
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut e47, mut shift, mut index, mut hyper) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let pr = random_params(&mut rng, 2);
        let (a, g, h) = (pr.a_h(2), pr.gamma_h(2), pr.h_shift(2));
        let half = 0.5 * (pr.nf() - 2.0);
        let s1 = (a * a).abs() + g.abs() + half * half;
        e47 = e47.max((a * a + g - half * half).abs() / s1.max(1.0));
        let s2 = h * h + (2.0 * a * h).abs() + g.abs();
        e47 = e47.max((h * h + 2.0 * a * h - g).abs() / s2.max(1.0));

        let m: u32 = rng.gen_range(1..=3);
        let lowered = pp(pr.n, pr.p, pr.alpha - 2.0 * m as f64 * pr.p, 2);
        let lhs = lowered.gamma_h(2);
        let rhs = pr.gamma_h(2 * m as i32 + 2);
        shift = shift.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
        let hh: i32 = rng.gen_range(1..=3);
        let lowered = pp(pr.n, pr.p, pr.alpha - pr.p, 2);
        let lhs = lowered.gamma_h(2 * hh);
        let rhs = pr.gamma_h(2 * hh + 1);
        shift = shift.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));

        let k = rng.gen_range(2..=5);
        let j = rng.gen_range(1..k);
        let q = pr.p + rng.gen_range(0.1..=4.0);
        let ps = pp(pr.n, pr.p, pr.alpha, k)
            .with_j(j)
            .unwrap()
            .with_q(q)
            .unwrap();
        for h in 0..=3 {
            let a = ps.index_shift_h(h).unwrap();
            let b = ps.h_shift((k - j) as i32 + h);
            index = index.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
        }

        let hp = pr.with_q(q).unwrap();
        hyper = hyper.max(hle_system_check(&hp).unwrap().hyperbola_relative);
    }
    let worst = e47.max(shift).max(index).max(hyper);
    ensure(worst <= 1e-12, || {
        format!("pair {e47:e}, gamma-shift {shift:e}, index {index:e}, hyperbola {hyper:e}")
    })?;
    Ok(vec![format!(
        "pair {e47:.1e}, gamma-shift {shift:.1e}, index shift {index:.1e}, hyperbola {hyper:.1e}"
    )])
}

fn criterion_3() -> Outcome {
    let cfg = QuadratureConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut lines = Vec::new();
    for k in 1..=4 {
        let mut worst = 0.0_f64;
        let mut done = 0;
        while done < 20 {
            let pr = random_params(&mut rng, k);
            if !pr.positivity_check_with(1e-3).positive {
                continue;
            }
            let deg = rng.gen_range(0..=3);
            let coeffs: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let g = GaussPoly::new(coeffs, rng.gen_range(-2.0..=2.0), rng.gen_range(0.6..=1.5))
                .unwrap();
            let (lhs, rhs) = norm_identity(Arc::new(g), &pr, k, &cfg).map_err(|e| e.to_string())?;
            worst = worst.max(rel(lhs, rhs));
            done += 1;
        }
        ensure(worst <= 1e-6, || format!("k={k}: relative {worst:e}"))?;
        lines.push(format!("k={k} max rel {worst:.1e}"));
    }
    Ok(vec![lines.join(", ")])
}

fn criterion_4() -> Outcome {
    let cfg = QuadratureConfig::default();
    let mut cases: Vec<(String, Inequality)> = Vec::new();
    for (n, p, a) in [(3, 2.0, 0.0), (5, 3.0, 1.0), (4, 1.5, -1.0)] {
        cases.push((
            format!("hardy {n},{p},{a}"),
            Inequality::Rellich {
                params: pp(n, p, a, 1),
            },
        ));
    }
    for (n, p, a) in [(5, 2.0, 0.0), (6, 3.0, 1.0), (3, 2.0, 2.5)] {
        cases.push((
            format!("rellich {n},{p},{a}"),
            Inequality::Rellich {
                params: pp(n, p, a, 2),
            },
        ));
    }
    for (n, p, a, k) in [(5, 2.0, 0.0, 2), (4, 3.0, 1.0, 2), (6, 2.0, 0.5, 4)] {
        let params = pp(n, p, a, k).with_j(k - 1).unwrap();
        cases.push((
            format!("laplacian-gradient {n},{p},{a},m={}", k / 2),
            Inequality::Intermediate { params },
        ));
    }
    for second in [false, true] {
        for (tau, lambda, p) in [(0.0, 2.0, 2.0), (1.5, -1.0, 3.0), (-0.5, 0.5, 1.5)] {
            let tag = if second {
                "half-line second"
            } else {
                "half-line first"
            };
            cases.push((
                format!("{tag} {tau},{lambda},{p}"),
                Inequality::HalfLine {
                    tau,
                    lambda,
                    p,
                    second,
                },
            ));
        }
    }
    let mut lines = Vec::new();
    for (i, (name, ineq)) in cases.iter().enumerate() {
        let rep = verify_inequality(ineq, 200, 100 + i as u64, &cfg)
            .map_err(|e| format!("{name}: {e}"))?;
        ensure(rep.violations == 0, || {
            format!("{name}: {} violations", rep.violations)
        })?;
        ensure(rep.min_quotient >= rep.constant * (1.0 - 1e-6), || {
            format!(
                "{name}: min quotient {} below {}",
                rep.min_quotient, rep.constant
            )
        })?;
        lines.push(format!(
            "  {name}: c={:.6} min={:.6}",
            rep.constant, rep.min_quotient
        ));
    }
    let mut out = vec![format!(
        "{} inequalities x 200 samples, zero violations",
        cases.len()
    )];
    out.extend(lines);
    Ok(out)
}

fn criterion_5() -> Outcome {
    let cfg = QuadratureConfig::default();
    let eps = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let mut out =
        vec!["Rellich families monotone and within 5%, degenerate families vanish".to_string()];
    for (n, p, a, k) in [(5, 2.0, 0.0, 2), (4, 3.0, 1.0, 3)] {
        let params = pp(n, p, a, k);
        let c = params.rellich_constant().value;
        let v = sharpness_family(
            &FamilyKind::Rellich { params },
            Arc::new(Bump::unit()),
            &eps,
            &cfg,
        )
        .map_err(|e| e.to_string())?;
        let monotone = v.windows(2).all(|w| w[1] < w[0]);
        let last = *v.last().unwrap();
        ensure(monotone, || {
            format!("({n},{p},{a},{k}) not monotone: {v:?}")
        })?;
        ensure(rel(last, c) <= 0.05, || {
            format!("({n},{p},{a},{k}) {last} vs {c}")
        })?;
        out.push(format!(
            "  ({n},{p},{a},{k}): c={c:.6}, eps=1e-3 gives {last:.6}"
        ));
    }
    let eps = [1.0, 1e-1, 1e-2, 1e-3];
    let degenerate = [
        (
            "I_pq(A,0)",
            QuotientSpec::Ipq {
                p: 2.0,
                q: 4.0,
                a: 0.5,
                gamma: 0.0,
            },
        ),
        ("singular hardy", QuotientSpec::Hardy1d { p: 2.0, a: 1.0 }),
        (
            "J_pq(A,0,-2A)",
            QuotientSpec::Jpq {
                p: 2.0,
                q: 4.0,
                a: 0.5,
                gamma: 0.0,
                h: -1.0,
            },
        ),
    ];
    for (name, spec) in degenerate {
        let v = sharpness_family(
            &FamilyKind::Line { spec },
            Arc::new(Bump::unit()),
            &eps,
            &cfg,
        )
        .map_err(|e| e.to_string())?;
        let ratio = v[3] / v[0];
        ensure(ratio < 1e-3, || format!("{name}: ratio {ratio:e}"))?;
        out.push(format!("  {name}: q(1e-3)/q(1) = {ratio:.2e}"));
    }
    Ok(out)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let samples = default_line_samples();
    let (mut sys, mut cons) = (0.0_f64, 0.0_f64);
    let mut worst_draw = (0.0, 0.0, 0.0);
    for _ in 0..20 {
        let p = rng.gen_range(1.2..=4.0);
        let q = p + rng.gen_range(0.5..=4.0);
        let l = rng.gen_range(0.2..=3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let f = ExtremalF::new(p, q, l).map_err(|e| e.to_string())?;
        let r = residual_f_system(&f, &samples);
        sys = sys.max(r.system_max_abs());
        if r.conservation.max_abs > cons {
            cons = r.conservation.max_abs;
            worst_draw = (p, q, l);
        }
    }
    let mut g_worst = 0.0_f64;
    for (a, h) in [(0.0, 1.0), (0.5, 1.0), (0.1, -1.0), (0.3, -0.5)] {
        let g = ExtremalG::from_a_h(2.0, 4.0, a, h).map_err(|e| e.to_string())?;
        let r = residual_g_equation(&g, &line_samples(-8.0, 8.0, 33)).map_err(|e| e.to_string())?;
        g_worst = g_worst.max(r.equation.max_abs);
    }
    let phi = utilde_phi_identity(4, &log_samples(0.01, 100.0, 200)).map_err(|e| e.to_string())?;
    let cfg = QuadratureConfig::default();
    let mut weak = Vec::new();
    let mut weak_worst = 0.0_f64;
    for (n, p, a, q, cor) in [
        (5, 2.0, 0.5, 3.0, false),
        (3, 2.0, -0.5, 4.0, false),
        (5, 2.0, 0.0, 10.0 / 3.0, true),
    ] {
        let params = pp(n, p, a, 2);
        let u = if cor {
            u_cor_profile(n, p)
        } else {
            u2_profile(&params, q)
        }
        .map_err(|e| e.to_string())?;
        let r = residual_radial_biharmonic(&u, &params, q, BiharmonicMode::Weak, &[], &cfg)
            .map_err(|e| e.to_string())?;
        weak_worst = weak_worst.max(r.max_rel);
        weak.push(format!("{:.1e}", r.max_rel));
    }
    let summary = format!(
        "F system {sys:.1e}, conservation {cons:.1e} (worst draw p={:.3} q={:.3} lambda={:.3}), G {g_worst:.1e}, phi {:.1e}, weak [{}]",
        worst_draw.0,
        worst_draw.1,
        worst_draw.2,
        phi.max_abs,
        weak.join(", ")
    );
    let ok =
        cons <= 1e-9 && sys <= 1e-6 && g_worst <= 1e-6 && phi.max_abs <= 1e-8 && weak_worst <= 1e-6;
    if ok {
        Ok(vec![summary])
    } else {
        Err(summary)
    }
}

fn criterion_7() -> Outcome {
    let cfg = QuadratureConfig::default();
    let opts = MinimizeOptions::default();
    let mut out = vec!["grid minima against the closed-form extremal quotient".to_string()];
    // (p, q, lambda) and an (A, gamma, H) on the constraint with gamma/H = lambda
    let cases = [
        (2.0, 4.0, 1.0, (0.0, 1.0, 1.0)),
        (1.5, 3.0, -0.8, (0.1, 0.8, -1.0)),
        (3.0, 5.0, 2.0, (0.5, 2.0, 1.0)),
    ];
    for (p, q, lambda, (a, gamma, h)) in cases {
        let f: Arc<dyn LineFunction> = Arc::new(ExtremalF::new(p, q, lambda).unwrap());
        let reference = quotient_line(&QuotientSpec::Mpq { p, q, lambda }, f, &cfg)
            .map_err(|e| e.to_string())?;
        let m = minimize(&QuotientSpec::Mpq { p, q, lambda }, None, &opts)
            .map_err(|e| e.to_string())?;
        ensure(rel(m.value, reference) <= 0.01, || {
            format!("M_pq({p},{q},{lambda}) {} vs {reference}", m.value)
        })?;
        let j = minimize(&QuotientSpec::Jpq { p, q, a, gamma, h }, None, &opts)
            .map_err(|e| e.to_string())?;
        ensure(rel(j.value, reference) <= 0.02, || {
            format!("J_pq({p},{q},{a},{gamma},{h}) {} vs {reference}", j.value)
        })?;
        out.push(format!(
            "  ({p},{q},{lambda}): V_F={reference:.10} M={:.10} ({:.1e}) J={:.10} ({:.1e})",
            m.value,
            rel(m.value, reference),
            j.value,
            rel(j.value, reference)
        ));
    }
    Ok(out)
}

fn criterion_8() -> Outcome {
    let cfg = QuadratureConfig::default();
    let omega = 4.0 * std::f64::consts::PI;
    // u = (1 + r^2)^{-1/2} on R^3
    // r^2 u'^2 = x^2/(1+x)^3 and r^2 u^6 = x/(1+x)^3 with x = r^2
    let shape = |r: f64, pow: i32| {
        let x = r * r;
        if x.is_finite() {
            let t = x / (1.0 + x);
            if pow == 2 {
                t * t / (1.0 + x)
            } else {
                t / ((1.0 + x) * (1.0 + x))
            }
        } else {
            0.0
        }
    };
    let num = integrate_halfline(|r| shape(r, 2), &cfg)
        .map_err(|e| e.to_string())?
        .value;
    let den = integrate_halfline(|r| shape(r, 1), &cfg)
        .map_err(|e| e.to_string())?
        .value;
    let oracle = omega * num / (omega * den).powf(1.0 / 3.0);
    let rep = sobolev_constants(&pp(3, 2.0, 0.0, 1), &MinimizeOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(rel(rep.value, oracle) <= 0.03, || {
        format!("{} vs oracle {oracle}", rep.value)
    })?;
    Ok(vec![format!(
        "S={:.10} oracle={oracle:.10} rel {:.1e}",
        rep.value,
        rel(rep.value, oracle)
    )])
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Duration, fn() -> Outcome); 8] = [
        (1, "constant formulas", Duration::from_secs(1), criterion_1),
        (
            2,
            "algebraic identities",
            Duration::from_secs(1),
            criterion_2,
        ),
        (3, "norm identities", Duration::from_secs(30), criterion_3),
        (
            4,
            "inequality verification",
            Duration::from_secs(120),
            criterion_4,
        ),
        (
            5,
            "sharpness families",
            Duration::from_secs(60),
            criterion_5,
        ),
        (
            6,
            "extremal residuals",
            Duration::from_secs(120),
            criterion_6,
        ),
        (
            7,
            "variational consistency",
            Duration::from_secs(300),
            criterion_7,
        ),
        (
            8,
            "radial Sobolev oracle",
            Duration::from_secs(120),
            criterion_8,
        ),
    ];
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        let t = Instant::now();
        let outcome = run();
        let dt = t.elapsed();
        let (ok, lines) = match outcome {
            Ok(lines) if dt <= limit => (true, lines),
            Ok(lines) => (
                false,
                [vec![format!("runtime {dt:.2?} over {limit:?}")], lines].concat(),
            ),
            Err(msg) => (false, vec![msg]),
        };
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id} ({name}) [{dt:.2?}]: {}", lines[0]);
        for l in &lines[1..] {
            println!("{l}");
        }
        if !ok {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("all 8 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
