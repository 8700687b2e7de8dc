mod config;
mod error;
mod output;
mod run;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use config::{Command, Format, RunConfig, SweepRange, SWEEP_COLUMNS};
use error::CliError;
use run::Status;

#[derive(Parser)]
#[command(
    name = "hrl",
    version,
    about = "Weighted higher-order Rellich constants, extremals and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Sharp constant for (n, p, alpha, k), or the intermediate one when --j is given.
    Constants(Flags),
    /// Evaluate a closed-form extremal at points.
    Extremal(Flags),
    /// Check an inequality on random test functions.
    Verify(Flags),
    /// Quotients along a concentrating family.
    Sharpness(Flags),
    /// Grid minimization of a one-dimensional quotient.
    Minimize(Flags),
    /// Residual checks of the Euler-Lagrange equations.
    Residual(Flags),
    /// Run another command over a grid of parameters.
    Sweep(SweepFlags),
}

#[derive(Args, Clone, Default)]
struct Io {
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long, help_heading = "Input/output")]
    config: Option<PathBuf>,
    #[arg(long, help_heading = "Input/output")]
    output: Option<PathBuf>,
    #[arg(long, value_enum, help_heading = "Input/output")]
    format: Option<Format>,
}

#[derive(Args, Clone, Default)]
#[command(next_help_heading = "Parameters")]
struct Params {
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    j: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tau: Option<f64>,
}

#[derive(Args, Clone, Default)]
#[command(next_help_heading = "Operation")]
struct Ops {
    /// Which extremal, inequality, quotient or residual.
    #[arg(long)]
    kind: Option<String>,
    /// Sharpness family: rellich, line or half_line.
    #[arg(long)]
    family: Option<String>,
    /// Profile for sharpness families: bump or gaussian.
    #[arg(long)]
    base: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    eps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    points: Option<Vec<f64>>,
    /// Include the grid minimizer in the output.
    #[arg(long)]
    emit_minimizer: bool,
}

#[derive(Args, Clone, Default)]
#[command(next_help_heading = "Numerics")]
struct Numeric {
    #[arg(long)]
    grid_l: Option<f64>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    max_subdivisions: Option<usize>,
    /// Pass threshold for residual checks.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct Flags {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    params: Params,
    #[command(flatten)]
    ops: Ops,
    #[command(flatten)]
    numeric: Numeric,
}

#[derive(Args, Clone, Default)]
struct SweepFlags {
    #[command(flatten)]
    flags: Flags,
    /// Command to run at each point.
    #[arg(long, help_heading = "Sweep")]
    target: Option<String>,
    /// `name=start:stop:count`, repeatable.
    #[arg(long, help_heading = "Sweep", allow_hyphen_values = true)]
    range: Vec<String>,
    /// `name=v1,v2,...`, repeatable.
    #[arg(long, help_heading = "Sweep", allow_hyphen_values = true)]
    values: Vec<String>,
    /// Also write the table as CSV to this path.
    #[arg(long, help_heading = "Sweep")]
    csv: Option<PathBuf>,
}

fn parse_num(field: &str, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::invalid(field, format!("`{s}` is not a number")))
}

fn parse_range(spec: &str) -> Result<(String, SweepRange), CliError> {
    let (name, rest) = spec.split_once('=').ok_or_else(|| {
        CliError::invalid("range", format!("`{spec}`: expected name=start:stop:count"))
    })?;
    let field = format!("range.{name}");
    let parts: Vec<&str> = rest.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::invalid(field, "expected start:stop:count"));
    }
    let count = parts[2]
        .trim()
        .parse()
        .map_err(|_| CliError::invalid(&field, format!("`{}` is not a count", parts[2])))?;
    Ok((
        name.to_string(),
        SweepRange {
            values: None,
            start: Some(parse_num(&field, parts[0])?),
            stop: Some(parse_num(&field, parts[1])?),
            count: Some(count),
        },
    ))
}

fn parse_values(spec: &str) -> Result<(String, SweepRange), CliError> {
    let (name, rest) = spec
        .split_once('=')
        .ok_or_else(|| CliError::invalid("values", format!("`{spec}`: expected name=v1,v2,...")))?;
    let field = format!("values.{name}");
    let values = if rest.trim().is_empty() {
        Vec::new()
    } else {
        rest.split(',')
            .map(|s| parse_num(&field, s))
            .collect::<Result<_, _>>()?
    };
    Ok((
        name.to_string(),
        SweepRange {
            values: Some(values),
            ..Default::default()
        },
    ))
}

fn parse_command(field: &str, s: &str) -> Result<Command, CliError> {
    Ok(match s {
        "constants" => Command::Constants,
        "extremal" => Command::Extremal,
        "verify" => Command::Verify,
        "sharpness" => Command::Sharpness,
        "minimize" => Command::Minimize,
        "residual" => Command::Residual,
        other => {
            return Err(CliError::invalid(
                field,
                format!("unknown command `{other}`"),
            ))
        }
    })
}

impl Flags {
    fn to_config(&self) -> RunConfig {
        let (p, o, x) = (&self.params, &self.ops, &self.numeric);
        RunConfig {
            n: p.n,
            p: p.p,
            alpha: p.alpha,
            k: p.k,
            j: p.j,
            q: p.q,
            lambda: p.lambda,
            a: p.a,
            gamma: p.gamma,
            h: p.h,
            tau: p.tau,
            kind: o.kind.clone(),
            family: o.family.clone(),
            base: o.base.clone(),
            samples: o.samples,
            seed: o.seed,
            eps: o.eps.clone(),
            points: o.points.clone(),
            emit_minimizer: o.emit_minimizer.then_some(true),
            grid_l: x.grid_l,
            grid_n: x.grid_n,
            max_iter: x.max_iter,
            abs_tol: x.abs_tol,
            rel_tol: x.rel_tol,
            max_subdivisions: x.max_subdivisions,
            tol: x.tol,
            output: self.io.output.clone(),
            format: self.io.format,
            ..Default::default()
        }
    }
}

/// File config under flags, with kind names normalized to snake_case.
fn merged(command: Command, flags: &Flags, top: RunConfig) -> Result<RunConfig, CliError> {
    let mut cfg = match &flags.io.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.overlay(&top);
    if let Some(c) = cfg.command {
        if c != command {
            return Err(CliError::invalid(
                "command",
                format!("config is for `{}`, not `{}`", c.name(), command.name()),
            ));
        }
    }
    cfg.command = Some(command);
    for s in [&mut cfg.kind, &mut cfg.family, &mut cfg.base]
        .into_iter()
        .flatten()
    {
        *s = s.replace('-', "_").to_lowercase();
    }
    Ok(cfg)
}

/// The record fields describing the inputs, without output destinations.
fn inputs_of(cfg: &RunConfig) -> Value {
    let mut c = cfg.clone();
    c.output = None;
    c.csv = None;
    c.format = None;
    c.command = None;
    c.target = None;
    c.sweep = None;
    serde_json::to_value(&c).expect("config serializes")
}

fn numeric_config(command: Command, cfg: &RunConfig) -> Value {
    let mut out = json!({});
    if let Ok(q) = run::quadrature(cfg) {
        out["quadrature"] = serde_json::to_value(q).expect("config serializes");
    }
    if command == Command::Minimize {
        if let Ok(o) = run::minimize_options(cfg) {
            out["grid"] = json!({"l": o.grid.l, "n": o.grid.n});
            out["max_iter"] = json!(o.max_iter);
            out["tol"] = json!(o.tol);
        }
    }
    if let Some(t) = cfg.tol {
        out["tol"] = json!(t);
    }
    out
}

struct Record {
    value: Value,
    code: u8,
}

fn record(command: Command, cfg: &RunConfig) -> Record {
    let start = Instant::now();
    let result = run::execute(command, cfg);
    let elapsed = start.elapsed().as_secs_f64();
    let mut value = json!({
        "schema": 1,
        "command": command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "inputs": inputs_of(cfg),
        "config": numeric_config(command, cfg),
    });
    let code = match result {
        Ok(out) => {
            value["outputs"] = out.outputs;
            value["status"] = json!(out.status.name());
            u8::from(out.status == Status::Failed)
        }
        Err(e) => {
            value["outputs"] = Value::Null;
            value["status"] = json!("error");
            value["error"] = json!(e.to_string());
            e.exit_code()
        }
    };
    value["timing"] = json!({"elapsed_s": elapsed});
    Record { value, code }
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io {
            path: p.clone(),
            source: e,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io {
                    path: "<stdout>".into(),
                    source: e,
                })
        }
    }
}

fn single(command: Command, flags: &Flags) -> Result<u8, CliError> {
    let cfg = merged(command, flags, flags.to_config())?;
    if cfg.format == Some(Format::Csv) {
        return Err(CliError::invalid(
            "format",
            "csv output is only available for sweep",
        ));
    }
    let rec = record(command, &cfg);
    if rec.value["status"] == "error" {
        // bad input is reported on stderr only
        let msg = rec.value["error"].as_str().unwrap_or_default().to_string();
        if rec.code == 2 {
            return Err(CliError::invalid(field_of(&msg), reason_of(&msg)));
        }
    }
    write_out(cfg.output.as_ref(), &output::to_json(&rec.value))?;
    Ok(rec.code)
}

fn field_of(msg: &str) -> String {
    msg.split('`').nth(1).unwrap_or("input").to_string()
}

fn reason_of(msg: &str) -> String {
    msg.split_once(": ")
        .map(|(_, r)| r)
        .unwrap_or(msg)
        .to_string()
}

const MAX_COMBINATIONS: usize = 100_000;

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("HRL_THREADS") {
        let n: usize = v.parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            CliError::invalid("HRL_THREADS", format!("`{v}` is not a positive integer"))
        })?;
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| CliError::invalid("HRL_THREADS", e.to_string()))
}

fn sweep(sf: &SweepFlags) -> Result<u8, CliError> {
    let mut top = sf.flags.to_config();
    top.csv = sf.csv.clone();
    if let Some(t) = &sf.target {
        top.target = Some(parse_command("target", t)?);
    }
    let mut ranges = BTreeMap::new();
    for r in &sf.range {
        let (k, v) = parse_range(r)?;
        ranges.insert(k, v);
    }
    for r in &sf.values {
        let (k, v) = parse_values(r)?;
        ranges.insert(k, v);
    }
    if !ranges.is_empty() {
        top.sweep = Some(ranges);
    }
    let cfg = merged(Command::Sweep, &sf.flags, top)?;
    let target = cfg
        .target
        .ok_or_else(|| CliError::invalid("target", "required for sweep"))?;
    let extra = run::output_columns(target)?;

    let axes: Vec<(String, Vec<f64>)> = cfg
        .sweep
        .clone()
        .unwrap_or_default()
        .into_iter()
        .map(|(k, r)| r.points(&k).map(|p| (k, p)))
        .collect::<Result<_, _>>()?;
    let total = axes
        .iter()
        .try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len()))
        .filter(|t| *t <= MAX_COMBINATIONS)
        .ok_or_else(|| {
            CliError::invalid(
                "sweep",
                format!("more than {MAX_COMBINATIONS} combinations"),
            )
        })?;

    let mut base = cfg.clone();
    base.sweep = None;
    base.target = None;
    base.output = None;
    base.csv = None;
    base.format = None;
    base.command = None;
    let mut points = Vec::with_capacity(total);
    for idx in 0..total {
        let mut c = base.clone();
        let mut rem = idx;
        for (name, vals) in axes.iter().rev() {
            c.set(name, vals[rem % vals.len()])?;
            rem /= vals.len();
        }
        points.push(c);
    }
    let pool = thread_pool()?;
    let records: Vec<Record> =
        pool.install(|| points.par_iter().map(|c| record(target, c)).collect());
    let code = records.iter().map(|r| r.code).max().unwrap_or(0);

    let header: Vec<String> = SWEEP_COLUMNS
        .iter()
        .chain(extra)
        .chain(["status", "error"].iter())
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<(Value, Value)> = records
        .iter()
        .map(|r| {
            let mut inputs = r.value["inputs"].clone();
            if let Some(e) = inputs
                .get("eps")
                .and_then(|e| e.as_array())
                .filter(|e| e.len() == 1)
            {
                inputs["eps"] = e[0].clone();
            }
            let mut outs = r.value["outputs"].clone();
            if outs.is_null() {
                outs = json!({});
            }
            outs["status"] = r.value["status"].clone();
            outs["error"] = r.value.get("error").cloned().unwrap_or(Value::Null);
            (inputs, outs)
        })
        .collect();
    let csv = output::to_csv(&header, &rows);
    if let Some(path) = &cfg.csv {
        write_out(Some(path), &csv)?;
    }
    let main_out = match cfg.format {
        Some(Format::Csv) => csv,
        _ => output::to_json(&Value::Array(
            records.into_iter().map(|r| r.value).collect(),
        )),
    };
    write_out(cfg.output.as_ref(), &main_out)?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Sub::Constants(f) => single(Command::Constants, f),
        Sub::Extremal(f) => single(Command::Extremal, f),
        Sub::Verify(f) => single(Command::Verify, f),
        Sub::Sharpness(f) => single(Command::Sharpness, f),
        Sub::Minimize(f) => single(Command::Minimize, f),
        Sub::Residual(f) => single(Command::Residual, f),
        Sub::Sweep(s) => sweep(s),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
