//! Dispatch of a merged [`RunConfig`] to the library.

use std::sync::Arc;

use hrl_core::closed_forms::{u2_profile, u_cor_profile, ExtremalF, ExtremalG, UTilde, U1};
use hrl_core::emden_fowler::{Bump, GaussPoly, LineFunction, RadialProfile};
use hrl_core::numerics::{Grid, QuadratureConfig};
use hrl_core::params::nonradial_rellich_p2;
use hrl_core::residuals::{
    default_line_samples, default_radial_samples, hle_system_check, residual_f_system,
    residual_g_equation, residual_radial_biharmonic, residual_radial_p_laplace,
    utilde_phi_identity, BiharmonicMode, OuterDerivative, ResidualReport,
};
use hrl_core::variational::{
    minimize, sharpness_family, sobolev_constants, verify_inequality, FamilyKind, Inequality,
    MinimizeOptions, QuotientSpec,
};
use hrl_core::ProblemParams;
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok,
    Failed,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Failed => "verification_failed",
        }
    }
}

pub struct Outcome {
    pub outputs: Value,
    pub status: Status,
}

fn ok(outputs: Value) -> Outcome {
    Outcome {
        outputs,
        status: Status::Ok,
    }
}

fn need<T: Copy>(v: Option<T>, field: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::invalid(field, "required for this command"))
}

pub fn problem_params(cfg: &RunConfig, default_k: u32) -> Result<ProblemParams, CliError> {
    let mut pr = ProblemParams::new(
        need(cfg.n, "n")?,
        need(cfg.p, "p")?,
        cfg.alpha.unwrap_or(0.0),
        cfg.k.unwrap_or(default_k),
    )?;
    if let Some(j) = cfg.j {
        pr = pr.with_j(j)?;
    }
    if let Some(q) = cfg.q {
        pr = pr.with_q(q)?;
    }
    Ok(pr)
}

pub fn quadrature(cfg: &RunConfig) -> Result<QuadratureConfig, CliError> {
    let d = QuadratureConfig::default();
    let q = QuadratureConfig {
        abs_tol: cfg.abs_tol.unwrap_or(d.abs_tol),
        rel_tol: cfg.rel_tol.unwrap_or(d.rel_tol),
        max_subdivisions: cfg.max_subdivisions.unwrap_or(d.max_subdivisions),
        ..d
    };
    q.validate()?;
    Ok(q)
}

pub fn minimize_options(cfg: &RunConfig) -> Result<MinimizeOptions, CliError> {
    let d = MinimizeOptions::default();
    let grid = Grid::new(
        cfg.grid_l.unwrap_or(d.grid.l),
        cfg.grid_n.unwrap_or(d.grid.n),
    )?;
    Ok(MinimizeOptions {
        grid,
        max_iter: cfg.max_iter.unwrap_or(d.max_iter),
        ..d
    })
}

fn kind<'a>(cfg: &'a RunConfig, default: &'a str) -> &'a str {
    cfg.kind.as_deref().unwrap_or(default)
}

pub fn quotient_spec(cfg: &RunConfig, name: &str) -> Result<QuotientSpec, CliError> {
    let p = || need(cfg.p, "p");
    let q = || need(cfg.q, "q");
    let lambda = || need(cfg.lambda, "lambda");
    let a = || need(cfg.a, "a");
    let gamma = || need(cfg.gamma, "gamma");
    let h = || need(cfg.h, "h");
    let spec = match name {
        "m_p" => QuotientSpec::Mp { p: p()?, lambda: lambda()? },
        "m_pq" => QuotientSpec::Mpq { p: p()?, q: q()?, lambda: lambda()? },
        "i_p" => QuotientSpec::Ip { p: p()?, a: a()?, gamma: gamma()? },
        "i_pq" => QuotientSpec::Ipq { p: p()?, q: q()?, a: a()?, gamma: gamma()? },
        "j_p" => QuotientSpec::Jp { p: p()?, a: a()?, gamma: gamma()?, h: h()? },
        "j_pq" => QuotientSpec::Jpq { p: p()?, q: q()?, a: a()?, gamma: gamma()?, h: h()? },
        "hardy1d" => QuotientSpec::Hardy1d { p: p()?, a: a()? },
        "rellich_nd" => QuotientSpec::RellichNd { params: problem_params(cfg, 2)? },
        other => {
            return Err(CliError::invalid(
                "kind",
                format!("unknown quotient kind `{other}` (m_p, m_pq, i_p, i_pq, j_p, j_pq, hardy1d, rellich_nd)"),
            ))
        }
    };
    spec.validate()?;
    Ok(spec)
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Constants => constants(cfg),
        Command::Extremal => extremal(cfg),
        Command::Verify => verify(cfg),
        Command::Sharpness => sharpness(cfg),
        Command::Minimize => run_minimize(cfg),
        Command::Residual => residual(cfg),
        Command::Sweep => Err(CliError::invalid(
            "target",
            "a sweep cannot target another sweep",
        )),
    }
}

fn constants(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let pr = problem_params(cfg, 2)?;
    let report = match pr.j {
        Some(_) => pr.intermediate_constant()?,
        None => pr.rellich_constant(),
    };
    let positivity = pr.positivity_check();
    let mut out = json!({
        "value": report.value,
        "log_value": report.log_value,
        "degenerate": report.degenerate,
        "factors": report.factors,
        "bases": report.bases,
        "hardy_h": pr.hardy_h(),
        "vanishing": positivity.offending.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>(),
    });
    if pr.p == 2.0 && pr.k == 2 && pr.j.is_none() {
        out["nonradial_value"] = json!(nonradial_rellich_p2(pr.n, pr.alpha)?);
    }
    if let (Some(j), Some(_)) = (pr.j, pr.q) {
        out["beta"] = json!(pr.beta_exponent(pr.k - j)?);
    }
    Ok(ok(out))
}

fn extremal(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let name = kind(cfg, "f");
    let line = matches!(name, "f" | "g");
    let points = cfg.points.clone().unwrap_or_else(|| {
        if line {
            (0..=20).map(|i| -10.0 + i as f64).collect()
        } else {
            (0..=20)
                .map(|i| 10f64.powf(-2.0 + 0.2 * i as f64))
                .collect()
        }
    });
    let eval_line = |f: &dyn LineFunction| -> Vec<[f64; 2]> {
        points
            .iter()
            .map(|&s| {
                let d = f.derivatives(s);
                [d[0], d[1]]
            })
            .collect()
    };
    let eval_radial = |u: &dyn RadialProfile| -> Vec<[f64; 2]> {
        points
            .iter()
            .map(|&r| {
                let d = u.derivatives(r);
                [d[0], d[1]]
            })
            .collect()
    };
    let (values, extra) = match name {
        "f" => {
            let f = ExtremalF::new(
                need(cfg.p, "p")?,
                need(cfg.q, "q")?,
                need(cfg.lambda, "lambda")?,
            )?;
            (eval_line(&f), json!({"k_f": f.k_f, "c1": f.c1, "c2": f.c2}))
        }
        "g" => {
            let (p, q, a, h) = (
                need(cfg.p, "p")?,
                need(cfg.q, "q")?,
                need(cfg.a, "a")?,
                need(cfg.h, "h")?,
            );
            let g = match cfg.gamma {
                Some(gamma) => ExtremalG::new(p, q, a, gamma, h)?,
                None => ExtremalG::from_a_h(p, q, a, h)?,
            };
            let mut vals = Vec::new();
            for &s in &points {
                vals.push([g.eval_derivative(s, 0)?, g.eval_derivative(s, 1)?]);
            }
            (
                vals,
                json!({"k_g": g.k_g, "gamma": g.gamma, "lambda": g.lambda()}),
            )
        }
        "u1" => {
            let pr = problem_params(
                &RunConfig {
                    k: Some(1),
                    j: None,
                    q: None,
                    ..cfg.clone()
                },
                1,
            )?;
            let u = U1::new(&pr, need(cfg.q, "q")?)?;
            (eval_radial(&u), json!({"amplitude": u.amplitude, "b": u.b}))
        }
        "u2" | "ucor" => {
            let u = if name == "u2" {
                let pr = problem_params(
                    &RunConfig {
                        k: Some(2),
                        j: None,
                        q: None,
                        ..cfg.clone()
                    },
                    2,
                )?;
                u2_profile(&pr, need(cfg.q, "q")?)?
            } else {
                u_cor_profile(need(cfg.n, "n")?, need(cfg.p, "p")?)?
            };
            let mut vals = Vec::new();
            for &r in &points {
                vals.push([u.eval(r)?, u.derivative_jet(r).value()]);
            }
            (vals, json!({"amplitude": u.amplitude, "exponent": u.e}))
        }
        "utilde" => {
            let u = UTilde::new(need(cfg.n, "n")?)?;
            let mut vals = Vec::new();
            for &r in &points {
                vals.push([u.eval(r)?, u.derivative(r)]);
            }
            (vals, json!({"k": u.k, "p": u.p()}))
        }
        other => {
            return Err(CliError::invalid(
                "kind",
                format!("unknown extremal `{other}` (f, g, u1, u2, ucor, utilde)"),
            ))
        }
    };
    Ok(ok(json!({
        "extremal": name,
        "variable": if line { "s" } else { "r" },
        "points": points,
        "values": values.iter().map(|v| v[0]).collect::<Vec<_>>(),
        "derivatives": values.iter().map(|v| v[1]).collect::<Vec<_>>(),
        "constants": extra,
    })))
}

fn inequality(cfg: &RunConfig) -> Result<Inequality, CliError> {
    Ok(match kind(cfg, "hardy") {
        "hardy" => Inequality::Rellich {
            params: problem_params(&RunConfig { k: Some(1), j: None, ..cfg.clone() }, 1)?,
        },
        "rellich" => Inequality::Rellich {
            params: problem_params(&RunConfig { j: None, ..cfg.clone() }, 2)?,
        },
        "intermediate" => {
            let k = cfg.k.unwrap_or(2);
            let j = cfg.j.unwrap_or(k.saturating_sub(1));
            Inequality::Intermediate {
                params: problem_params(&RunConfig { k: Some(k), j: Some(j), ..cfg.clone() }, k)?,
            }
        }
        "half_line_hardy" => Inequality::HalfLineHardy { a: need(cfg.a, "a")?, p: need(cfg.p, "p")? },
        "half_line_first" | "half_line_second" => Inequality::HalfLine {
            tau: need(cfg.tau, "tau")?,
            lambda: need(cfg.lambda, "lambda")?,
            p: need(cfg.p, "p")?,
            second: kind(cfg, "") == "half_line_second",
        },
        other => {
            return Err(CliError::invalid(
                "kind",
                format!("unknown inequality `{other}` (hardy, rellich, intermediate, half_line_hardy, half_line_first, half_line_second)"),
            ))
        }
    })
}

fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ineq = inequality(cfg)?;
    let rep = verify_inequality(
        &ineq,
        cfg.samples.unwrap_or(200),
        cfg.seed.unwrap_or(0),
        &quadrature(cfg)?,
    )?;
    let status = if rep.violations == 0 {
        Status::Ok
    } else {
        Status::Failed
    };
    Ok(Outcome {
        outputs: serde_json::to_value(&rep).expect("report serializes"),
        status,
    })
}

const DEFAULT_EPS: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

fn sharpness(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let eps = cfg.eps.clone().unwrap_or_else(|| DEFAULT_EPS.to_vec());
    if eps.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(CliError::invalid("eps", "each eps must lie in (0, 1]"));
    }
    let base: Arc<dyn LineFunction> = match cfg.base.as_deref().unwrap_or("bump") {
        "bump" => Arc::new(Bump::unit()),
        "gaussian" => Arc::new(GaussPoly::gaussian()),
        other => {
            return Err(CliError::invalid(
                "base",
                format!("unknown base `{other}` (bump, gaussian)"),
            ))
        }
    };
    let (family, limit) = match cfg.family.as_deref().unwrap_or("rellich") {
        "rellich" => {
            let params = problem_params(
                &RunConfig {
                    j: None,
                    q: None,
                    ..cfg.clone()
                },
                2,
            )?;
            (
                FamilyKind::Rellich { params },
                Some(params.rellich_constant().value),
            )
        }
        "line" => {
            let spec = quotient_spec(cfg, kind(cfg, "i_p"))?;
            let limit = spec.closed_form();
            (FamilyKind::Line { spec }, limit)
        }
        "half_line" => {
            let (tau, lambda, p) = (
                need(cfg.tau, "tau")?,
                need(cfg.lambda, "lambda")?,
                need(cfg.p, "p")?,
            );
            let second = match kind(cfg, "first") {
                "first" => false,
                "second" => true,
                other => {
                    return Err(CliError::invalid(
                        "kind",
                        format!("`{other}`: use first or second"),
                    ))
                }
            };
            let (c1, c2) = hrl_core::params::half_line_constants(tau, lambda, p)?;
            (
                FamilyKind::HalfLine {
                    tau,
                    lambda,
                    p,
                    second,
                },
                Some(if second { c2 } else { c1 }),
            )
        }
        other => {
            return Err(CliError::invalid(
                "family",
                format!("unknown family `{other}` (rellich, line, half_line)"),
            ))
        }
    };
    let values = sharpness_family(&family, base, &eps, &quadrature(cfg)?)?;
    // ordered by decreasing eps, the quotients should decrease
    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&a, &b| eps[b].total_cmp(&eps[a]));
    let monotone = order.windows(2).all(|w| values[w[1]] <= values[w[0]]);
    Ok(ok(json!({
        "eps": eps,
        "quotients": values,
        "quotient": values.last().copied(),
        "monotone": monotone,
        "limit": limit,
    })))
}

fn run_minimize(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let opts = minimize_options(cfg)?;
    let name = kind(cfg, "m_pq");
    let (result, extra) = if name == "sobolev" {
        let pr = problem_params(
            &RunConfig {
                q: None,
                ..cfg.clone()
            },
            1,
        )?;
        if pr.alpha != 0.0 {
            return Err(CliError::invalid(
                "alpha",
                "Sobolev constants are unweighted; use alpha = 0",
            ));
        }
        let rep = sobolev_constants(&pr, &opts)?;
        let extra =
            json!({"line_value": rep.line_value, "omega_factor": rep.omega_factor, "q": rep.q});
        (rep.result, extra)
    } else {
        let spec = quotient_spec(cfg, name)?;
        let closed = spec.closed_form();
        (
            minimize(&spec, None, &opts)?,
            json!({"closed_form": closed}),
        )
    };
    let mut out = json!({
        "value": result.value,
        "converged": result.converged,
        "iterations": result.iterations,
        "not_attained": result.not_attained,
        "degenerate": result.degenerate,
        "history_first": result.history.first(),
        "history_last": result.history.last(),
    });
    for (k, v) in extra.as_object().unwrap() {
        out[k] = v.clone();
    }
    if cfg.emit_minimizer.unwrap_or(false) {
        out["minimizer"] = json!({
            "points": result.minimizer.grid.points(),
            "values": result.minimizer.values,
        });
    }
    Ok(ok(out))
}

fn summary(rep: &ResidualReport, tol: f64, relative: bool) -> (Value, bool) {
    let measure = if relative { rep.max_rel } else { rep.max_abs };
    let passed = measure <= tol;
    (
        json!({
            "max_abs": rep.max_abs,
            "max_rel": rep.max_rel,
            "measure": if relative { "max_rel" } else { "max_abs" },
            "tol": tol,
            "passed": passed,
            "sample_count": rep.sample_points.len(),
        }),
        passed,
    )
}

fn residual(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let name = kind(cfg, "f_system");
    let qcfg = quadrature(cfg)?;
    let line = || cfg.points.clone().unwrap_or_else(default_line_samples);
    let radial = || cfg.points.clone().unwrap_or_else(default_radial_samples);
    let (mut out, passed) = match name {
        "f_system" => {
            let f = ExtremalF::new(need(cfg.p, "p")?, need(cfg.q, "q")?, need(cfg.lambda, "lambda")?)?;
            let rep = residual_f_system(&f, &line());
            let tol = cfg.tol.unwrap_or(1e-6);
            let system = rep.system_max_abs();
            let cons = rep.conservation.max_abs;
            let passed = system <= tol && cons <= 1e-9;
            (
                json!({"system_max_abs": system, "conservation_max_abs": cons, "tol": tol,
                       "conservation_tol": 1e-9, "passed": passed,
                       "max_abs": system.max(cons), "max_rel": rep.first.max_rel.max(rep.second.max_rel)}),
                passed,
            )
        }
        "g_equation" => {
            let (p, q, a, h) = (need(cfg.p, "p")?, need(cfg.q, "q")?, need(cfg.a, "a")?, need(cfg.h, "h")?);
            let g = ExtremalG::from_a_h(p, q, a, h)?;
            let pts = cfg.points.clone().unwrap_or_else(|| (0..=32).map(|i| -8.0 + 0.5 * i as f64).collect());
            let rep = residual_g_equation(&g, &pts)?;
            summary(&rep.equation, cfg.tol.unwrap_or(1e-6), false)
        }
        "p_laplace" => {
            let pr = problem_params(&RunConfig { k: Some(1), j: None, q: None, ..cfg.clone() }, 1)?;
            let u = U1::new(&pr, need(cfg.q, "q")?)?;
            let rep = residual_radial_p_laplace(&u, &radial(), OuterDerivative::Analytic);
            summary(&rep, cfg.tol.unwrap_or(1e-8), true)
        }
        "biharmonic_weak" | "biharmonic_strong" | "cor_weak" => {
            let pr = problem_params(&RunConfig { k: Some(2), j: None, q: None, ..cfg.clone() }, 2)?;
            let (u, q) = if name == "cor_weak" {
                if pr.alpha != 0.0 {
                    return Err(CliError::invalid("alpha", "the critical profile is unweighted; use alpha = 0"));
                }
                let n = pr.nf();
                (u_cor_profile(pr.n, pr.p)?, n * pr.p / (n - pr.p))
            } else {
                let q = need(cfg.q, "q")?;
                (u2_profile(&pr, q)?, q)
            };
            let mode = if name == "biharmonic_strong" { BiharmonicMode::Strong } else { BiharmonicMode::Weak };
            let rep = residual_radial_biharmonic(&u, &pr, q, mode, &radial(), &qcfg)?;
            summary(&rep, cfg.tol.unwrap_or(1e-6), true)
        }
        "phi_identity" => {
            let rep = utilde_phi_identity(need(cfg.n, "n")?, &radial())?;
            summary(&rep, cfg.tol.unwrap_or(1e-8), false)
        }
        "hle" => {
            let pr = problem_params(&RunConfig { k: Some(2), j: None, ..cfg.clone() }, 2)?;
            let rep = hle_system_check(&pr)?;
            let tol = cfg.tol.unwrap_or(1e-12);
            let passed = rep.hyperbola_relative <= tol;
            let mut v = serde_json::to_value(&rep).expect("report serializes");
            v["passed"] = json!(passed);
            v["tol"] = json!(tol);
            (v, passed)
        }
        other => {
            return Err(CliError::invalid(
                "kind",
                format!("unknown residual `{other}` (f_system, g_equation, p_laplace, biharmonic_weak, biharmonic_strong, cor_weak, phi_identity, hle)"),
            ))
        }
    };
    out["residual"] = json!(name);
    Ok(Outcome {
        outputs: out,
        status: if passed { Status::Ok } else { Status::Failed },
    })
}

/// CSV output columns of each sweep target.
pub fn output_columns(target: Command) -> Result<&'static [&'static str], CliError> {
    Ok(match target {
        Command::Constants => &["value", "log_value", "degenerate"],
        Command::Verify => &["constant", "min_quotient", "violations", "samples"],
        Command::Sharpness => &["quotient", "limit"],
        Command::Minimize => &["value", "converged", "iterations"],
        Command::Residual => &["max_abs", "max_rel", "passed"],
        Command::Extremal | Command::Sweep => {
            return Err(CliError::invalid(
                "target",
                "sweep targets are constants, verify, sharpness, minimize, residual",
            ))
        }
    })
}
