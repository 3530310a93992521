use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use cuspflow::harness::{self, emit_report, exit, Experiment, ExperimentConfig, OutputFormat};
use cuspflow::{Error, Result};

/// Runs a cuspflow experiment and writes its report.
#[derive(Parser)]
#[command(name = "cuspflow", version)]
struct Opts {
    /// One of lemmas, validate, contract.
    experiment: Experiment,
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, json or both.
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Number of grid nodes for the primary runs.
    #[arg(long)]
    grid: Option<String>,
    /// Comma-separated cap radii, e.g. "e^-20,e^-30".
    #[arg(long)]
    r0: Option<String>,
    /// Comma-separated sample times.
    #[arg(long = "t-samples")]
    t_samples: Option<String>,
}

fn load(opts: &Opts) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(opts.experiment, &opts.config)?;
    for (key, value) in [("grid", &opts.grid), ("r0", &opts.r0), ("t_samples", &opts.t_samples)] {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if let Some(out) = &opts.out {
        cfg.out = out.clone();
    }
    if let Some(format) = opts.format {
        cfg.format = format;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(harness::exit_code(err) as u8)
}

fn main() -> ExitCode {
    let opts = Opts::parse();
    let cfg = match load(&opts) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e),
    };
    let report = match harness::run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let written = match emit_report(&report, cfg.format, &cfg.out) {
        Ok(w) => w,
        Err(e) => return fail(&e),
    };
    for a in &report.assertions {
        println!("{} {}: {:.6e} (limit {:.6e}) {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.measured, a.tolerance, a.detail);
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    match report.first_failure() {
        None => ExitCode::from(exit::PASS as u8),
        Some(a) => {
            eprintln!("first failing assertion: {} (measured {:.6e}, limit {:.6e})", a.name, a.measured, a.tolerance);
            ExitCode::from(exit::ASSERTION_FAILED as u8)
        }
    }
}
