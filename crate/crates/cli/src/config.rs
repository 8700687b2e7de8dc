//! Run configuration: a TOML file mirroring the flags, with flags taking precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Constants,
    Extremal,
    Verify,
    Sharpness,
    Minimize,
    Residual,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Constants => "constants",
            Self::Extremal => "extremal",
            Self::Verify => "verify",
            Self::Sharpness => "sharpness",
            Self::Minimize => "minimize",
            Self::Residual => "residual",
            Self::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

/// One swept variable: explicit `values`, or `count` points from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

impl SweepRange {
    pub fn points(&self, name: &str) -> Result<Vec<f64>, CliError> {
        if let Some(v) = &self.values {
            if self.start.is_some() || self.stop.is_some() || self.count.is_some() {
                return Err(CliError::invalid(
                    format!("sweep.{name}"),
                    "give either values or start/stop/count",
                ));
            }
            return Ok(v.clone());
        }
        let missing = |f: &str| CliError::invalid(format!("sweep.{name}.{f}"), "missing");
        let start = self.start.ok_or_else(|| missing("start"))?;
        let stop = self.stop.ok_or_else(|| missing("stop"))?;
        let count = self.count.ok_or_else(|| missing("count"))?;
        Ok(match count {
            0 => Vec::new(),
            1 => vec![start],
            _ => {
                let step = (stop - start) / (count - 1) as f64;
                (0..count).map(|i| start + i as f64 * step).collect()
            }
        })
    }
}

/// Everything a run needs. Unset fields fall back to per-command defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_subdivisions: Option<usize>,
    /// Pass threshold for residual checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emit_minimizer: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<Command>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<BTreeMap<String, SweepRange>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .unwrap_or("config")
                .to_string();
            CliError::invalid(field, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are TOML-representable")
    }

    /// Fields set in `top` replace those in `self`; swept ranges merge by name.
    pub fn overlay(&mut self, top: &RunConfig) {
        overlay!(self, top; command, n, p, alpha, k, j, q, lambda, a, gamma, h, tau, kind,
            family, base, samples, seed, eps, points, grid_l, grid_n, max_iter, abs_tol, rel_tol,
            max_subdivisions, tol, emit_minimizer, target, output, csv, format);
        if let Some(top_sweep) = &top.sweep {
            let dst = self.sweep.get_or_insert_with(BTreeMap::new);
            for (k, v) in top_sweep {
                dst.insert(k.clone(), v.clone());
            }
        }
    }

    /// Sets a numeric field by name; used by sweeps.
    pub fn set(&mut self, name: &str, v: f64) -> Result<(), CliError> {
        let int = |v: f64| -> Result<u32, CliError> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as u32)
            } else {
                Err(CliError::invalid(
                    format!("sweep.{name}"),
                    format!("{v} is not a nonnegative integer"),
                ))
            }
        };
        match name {
            "n" => self.n = Some(int(v)?),
            "k" => self.k = Some(int(v)?),
            "j" => self.j = Some(int(v)?),
            "p" => self.p = Some(v),
            "alpha" => self.alpha = Some(v),
            "q" => self.q = Some(v),
            "lambda" => self.lambda = Some(v),
            "a" => self.a = Some(v),
            "gamma" => self.gamma = Some(v),
            "h" => self.h = Some(v),
            "tau" => self.tau = Some(v),
            "eps" => self.eps = Some(vec![v]),
            "seed" => self.seed = Some(int(v)? as u64),
            "samples" => self.samples = Some(int(v)? as usize),
            _ => {
                return Err(CliError::invalid(
                    format!("sweep.{name}"),
                    "not a sweepable parameter",
                ))
            }
        }
        Ok(())
    }
}

/// Parameter columns of every sweep table, in order.
pub const SWEEP_COLUMNS: [&str; 12] = [
    "n", "p", "alpha", "k", "j", "q", "lambda", "a", "gamma", "h", "tau", "eps",
];
