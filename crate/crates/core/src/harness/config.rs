//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Every key is optional:
//!
//! | key           | default                 | meaning                                   |
//! |---------------|-------------------------|-------------------------------------------|
//! | `r0`          | `e^-30, e^-20`          | cap radii; the smallest is the primary run |
//! | `grid`        | `4096`                  | nodes of the primary run                  |
//! | `grid_refined`| `8192`                  | nodes of the refinement run               |
//! | `liyau_grids` | `1024, 2048`            | nodes of the Li-Yau refinement pair       |
//! | `r_out`       | `0.9`                   | outer radius of the primary run           |
//! | `r_out_sweep` | `0.8, 0.95`             | alternative outer radii                   |
//! | `t_samples`   | 60 geometric in window  | sample times (must include `t_compare`)   |
//! | `t_window`    | `0.03, 0.2`             | fit and acceptance window                 |
//! | `t_compare`   | `0.1`                   | time of the independence comparisons      |
//! | `alpha`, `mu`, `c1` | `1.05, 0.12, 40`  | witness constants                         |
//! | `seed`        | `20240611`              | sampling seed of the lemma battery        |
//! | `out`         | `out`                   | output directory                          |
//! | `format`      | `json`                  | `json`, `csv` or `both`                   |
//!
//! Numbers accept the forms `1e-13`, `e^-30` and `0.5`; lists are comma
//! separated.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Lemmas,
    Validate,
    Contract,
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemmas" => Ok(Experiment::Lemmas),
            "validate" => Ok(Experiment::Validate),
            "contract" => Ok(Experiment::Contract),
            other => Err(Error::Config(format!("unknown experiment '{other}'"))),
        }
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Experiment::Lemmas => "lemmas",
            Experiment::Validate => "validate",
            Experiment::Contract => "contract",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub r0: Vec<f64>,
    pub grid: usize,
    pub grid_refined: usize,
    pub liyau_grids: Vec<usize>,
    pub r_out: f64,
    pub r_out_sweep: Vec<f64>,
    pub t_samples: Vec<f64>,
    pub t_window: (f64, f64),
    pub t_compare: f64,
    pub alpha: f64,
    pub mu: f64,
    pub c1: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub format: OutputFormat,
}

/// Geometric sample times covering `[lo, hi]`, with `extra` merged in.
pub fn geometric_times(lo: f64, hi: f64, count: usize, extra: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = (0..count)
        .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64))
        .collect();
    out.extend_from_slice(extra);
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    out
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        Self {
            experiment,
            r0: vec![(-30.0f64).exp(), (-20.0f64).exp()],
            grid: 4096,
            grid_refined: 8192,
            liyau_grids: vec![1024, 2048],
            r_out: 0.9,
            r_out_sweep: vec![0.8, 0.95],
            // About four samples per Li-Yau window [t1, 17 t1 / 16].
            t_samples: geometric_times(0.03, 0.2, 126, &[0.1]),
            t_window: (0.03, 0.2),
            t_compare: 0.1,
            alpha: 1.05,
            mu: 0.12,
            c1: 40.0,
            seed: 20240611,
            out: PathBuf::from("out"),
            format: OutputFormat::Json,
        }
    }

    /// Reads a config file over the defaults.
    pub fn from_file(experiment: Experiment, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(experiment, &text)
    }

    pub fn parse(experiment: Experiment, text: &str) -> Result<Self> {
        let mut cfg = Self::defaults(experiment);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value, got '{line}'", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "r0" => self.r0 = parse_list(value)?,
            "grid" => self.grid = parse_count(value)?,
            "grid_refined" => self.grid_refined = parse_count(value)?,
            "liyau_grids" => {
                self.liyau_grids = value.split(',').map(|s| parse_count(s.trim())).collect::<Result<_>>()?
            }
            "r_out" => self.r_out = parse_number(value)?,
            "r_out_sweep" => self.r_out_sweep = parse_list(value)?,
            "t_samples" => self.t_samples = parse_list(value)?,
            "t_window" => {
                let w = parse_list(value)?;
                if w.len() != 2 {
                    return Err(Error::Config(format!("t_window needs two values, got {}", w.len())));
                }
                self.t_window = (w[0], w[1]);
            }
            "t_compare" => self.t_compare = parse_number(value)?,
            "alpha" => self.alpha = parse_number(value)?,
            "mu" => self.mu = parse_number(value)?,
            "c1" => self.c1 = parse_number(value)?,
            "seed" => {
                self.seed = value.parse().map_err(|_| Error::Config(format!("bad seed '{value}'")))?
            }
            "out" => self.out = PathBuf::from(value),
            "format" => self.format = value.parse()?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.c1 > 32.0) {
            return bad(format!("c1 = {} must exceed 32", self.c1));
        }
        let q = 2.0 * self.mu * self.mu / self.alpha;
        if !(q < 1.0 / 32.0 && q > 1.0 / self.c1) {
            return bad(format!(
                "need 1/32 > 2 mu^2 / alpha > 1/c1, got 2 mu^2 / alpha = {q}, 1/c1 = {}",
                1.0 / self.c1
            ));
        }
        if !(self.alpha > 1.0 && self.mu > 0.0) {
            return bad(format!("need alpha > 1 and mu > 0, got {} and {}", self.alpha, self.mu));
        }
        if self.r0.is_empty() || self.r0.iter().any(|&r| !(r > 0.0 && r < crate::metrics::HORIZON)) {
            return bad(format!("cap radii must lie in (0, e^-1), got {:?}", self.r0));
        }
        for &r in std::iter::once(&self.r_out).chain(&self.r_out_sweep) {
            if !(r > 0.5 && r < 1.0) {
                return bad(format!("outer radius {r} must lie in (0.5, 1)"));
            }
        }
        if self.t_samples.is_empty()
            || self.t_samples.windows(2).any(|w| !(w[0] < w[1]))
            || !(self.t_samples[0] > 0.0)
        {
            return bad("t_samples must be positive and strictly increasing".into());
        }
        // The origin bound's optimal cap e^{-1/(4t)} leaves (0, e^-1) at t = 1/4.
        if !(self.t_samples[self.t_samples.len() - 1] < 0.25 && self.t_compare > 0.0 && self.t_compare < 0.25) {
            return bad("sample and comparison times must lie below 1/4".into());
        }
        if self.liyau_grids.len() < 2 {
            return bad("liyau_grids needs two grid sizes to compare".into());
        }
        let (lo, hi) = self.t_window;
        if !(lo > 0.0 && lo < hi && hi < 0.25) {
            return bad(format!("t_window ({lo}, {hi}) must satisfy 0 < lo < hi < 1/4"));
        }
        for n in std::iter::once(&self.grid).chain(&[self.grid_refined]).chain(&self.liyau_grids) {
            if *n < 64 {
                return bad(format!("grid of {n} nodes is too coarse"));
            }
        }
        Ok(())
    }

    /// Smallest cap radius: the run closest to the contracting cusp.
    pub fn primary_r0(&self) -> f64 {
        self.r0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Parses `1e-13`, `0.5`, `e^-30` or `e^(-30)`.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let value = if let Some(exp) = s.strip_prefix("e^") {
        let exp = exp.trim_start_matches('(').trim_end_matches(')');
        exp.parse::<f64>().map(f64::exp)
    } else {
        s.parse::<f64>()
    };
    match value {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Config(format!("bad number '{s}'"))),
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').filter(|x| !x.trim().is_empty()).map(parse_number).collect()
}

fn parse_count(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Config(format!("bad count '{s}'")))
}
