//! Report assembly and deterministic JSON/CSV output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{Experiment, ExperimentConfig, OutputFormat};
use super::fit::RateFit;
use crate::error::{Error, Result};
use crate::solver::SolverStats;

pub const SCHEMA_VERSION: u32 = 1;

/// One pass/fail check with the measured quantity and its threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Assertion {
    /// Passes when `measured <= tolerance`.
    pub fn at_most(name: &str, measured: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: measured <= tolerance, measured, tolerance, detail: detail.into() }
    }

    /// Passes when `measured >= tolerance`.
    pub fn at_least(name: &str, measured: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: measured >= tolerance, measured, tolerance, detail: detail.into() }
    }

    pub fn within(name: &str, measured: f64, lo: f64, hi: f64, detail: impl Into<String>) -> Self {
        let detail = format!("{} (range [{lo}, {hi}])", detail.into());
        Self { name: name.into(), passed: measured >= lo && measured <= hi, measured, tolerance: hi, detail }
    }

    pub fn error(name: &str, err: &Error) -> Self {
        Self { name: name.into(), passed: false, measured: f64::NAN, tolerance: f64::NAN, detail: err.to_string() }
    }
}

/// Diagnostics of the primary contraction run at one sample time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub t: f64,
    pub v0: f64,
    pub t_v0: f64,
    /// `1/(8t) + ½(1 + log 4t)`.
    pub origin_bound: f64,
    pub max_k: f64,
    pub t2_max_k: f64,
    pub witness_k0: Option<f64>,
    pub t2_witness: Option<f64>,
    /// `sup (t' - t) K / v` on `B_{1/4}` over the window `[t, 17t/16]`.
    pub liyau_sup: Option<f64>,
    /// `sup_{0.5 <= r <= 0.8} |K + 1/(1 + 2t)|`.
    pub annulus_dev: f64,
    /// `min (u / ((1 + 2t) h̃) - 1)` over interior nodes.
    pub sandwich_lower: f64,
    /// `max (u / ((1 + 2t) h) - 1)` over interior nodes.
    pub sandwich_upper: f64,
    /// `t · max_{r <= 1/2} v`.
    pub t_vmax_half: f64,
    /// `sup_{r <= 1/2} |∇ log v|²_u`.
    pub grad_sup_half: f64,
}

/// Column names of `series.csv`, in order; one column per [`Row`] field.
pub const CSV_COLUMNS: [&str; 14] = [
    "t",
    "v0",
    "t_v0",
    "origin_bound",
    "max_k",
    "t2_max_k",
    "witness_k0",
    "t2_witness",
    "liyau_sup",
    "annulus_dev",
    "sandwich_lower",
    "sandwich_upper",
    "t_vmax_half",
    "grad_sup_half",
];

impl Row {
    fn fields(&self) -> [Option<f64>; 14] {
        [
            Some(self.t),
            Some(self.v0),
            Some(self.t_v0),
            Some(self.origin_bound),
            Some(self.max_k),
            Some(self.t2_max_k),
            self.witness_k0,
            self.t2_witness,
            self.liyau_sup,
            Some(self.annulus_dev),
            Some(self.sandwich_lower),
            Some(self.sandwich_upper),
            Some(self.t_vmax_half),
            Some(self.grad_sup_half),
        ]
    }
}

/// One solver run inside an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub r0: f64,
    pub nodes: usize,
    pub r_out: f64,
    pub stats: SolverStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub assertions: Vec<Assertion>,
    pub rows: Vec<Row>,
    pub fit: Option<RateFit>,
    /// Named measured constants (static bounds, recorded C, ...).
    pub metrics: BTreeMap<String, f64>,
    pub runs: Vec<RunSummary>,
}

impl RunReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            experiment: config.experiment,
            config: config.clone(),
            assertions: Vec::new(),
            rows: Vec::new(),
            fit: None,
            metrics: BTreeMap::new(),
            runs: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn first_failure(&self) -> Option<&Assertion> {
        self.assertions.iter().find(|a| !a.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> String {
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.fields().iter().map(|f| format_float(*f)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip decimal; empty for missing or non-finite values.
fn format_float(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => {
            let mut s = String::new();
            // serde_json prints f64 as the shortest string that parses back exactly.
            write!(s, "{}", serde_json::Value::from(v)).expect("writing to a String");
            s
        }
        _ => String::new(),
    }
}

/// Writes `report.json` and/or `series.csv` into `dir`.
pub fn emit_report(report: &RunReport, format: OutputFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|source| Error::Io { path: path.clone(), source })?;
        written.push(path);
        Ok(())
    };
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        put("report.json", report.to_json()?)?;
    }
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        put("series.csv", report.to_csv())?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> RunReport {
        let cfg = ExperimentConfig::defaults(Experiment::Contract);
        let mut r = RunReport::new(&cfg);
        r.rows.push(Row {
            t: 0.1,
            v0: 1.0 / 3.0,
            t_v0: 0.1 / 3.0,
            origin_bound: 1.3,
            max_k: 1e300,
            t2_max_k: 5e-324,
            witness_k0: None,
            t2_witness: None,
            liyau_sup: Some(0.0625),
            annulus_dev: 2.0f64.sqrt(),
            sandwich_lower: -0.0,
            sandwich_upper: 1e-17,
            t_vmax_half: 0.35,
            grad_sup_half: 1.4,
        });
        r.metrics.insert("b".into(), f64::NAN);
        r.metrics.insert("a".into(), 1.0);
        r
    }

    #[test]
    fn csv_shape() {
        let csv = sample_report().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines.iter().all(|l| l.split(',').count() == CSV_COLUMNS.len()));
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
    }

    #[test]
    fn json_round_trips_floats_exactly() {
        let r = sample_report();
        let json = r.to_json().unwrap();
        let back: serde_json::Value = serde_json::from_str(&json).unwrap();
        let row = &back["rows"][0];
        for (key, want) in [("v0", 1.0 / 3.0), ("max_k", 1e300), ("t2_max_k", 5e-324), ("annulus_dev", 2.0f64.sqrt())] {
            assert_eq!(row[key].as_f64().unwrap().to_bits(), want.to_bits(), "{key}");
        }
        assert!(row["witness_k0"].is_null());
        assert!(back["metrics"]["b"].is_null());
        assert_eq!(back["schema"], 1);
        assert_eq!(json, r.to_json().unwrap());
    }

    #[test]
    fn failures_are_named() {
        let mut r = sample_report();
        r.assertions.push(Assertion::at_most("ok", 1.0, 2.0, ""));
        r.assertions.push(Assertion::at_least("floor", 1.0, 2.0, ""));
        assert!(!r.passed());
        assert_eq!(r.first_failure().unwrap().name, "floor");
    }
}
