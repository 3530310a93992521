//! Experiment harness: configuration, the three suites, and report output.

pub mod config;
pub mod contract;
pub mod fit;
pub mod lemmas;
pub mod report;
pub mod validate;

pub use config::{Experiment, ExperimentConfig, OutputFormat};
pub use fit::{rate_fit, RateFit};
pub use report::{emit_report, Assertion, Row, RunReport, RunSummary, CSV_COLUMNS};

use crate::error::{Error, Result};

/// Environment variable bounding the worker pool.
pub const THREADS_VAR: &str = "CUSPFLOW_THREADS";

pub mod exit {
    pub const PASS: i32 = 0;
    pub const ASSERTION_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const SOLVER: i32 = 3;
}

/// Exit code for an error that aborted an experiment.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Config(_) | Error::Json(_) | Error::Io { .. } => exit::CONFIG,
        _ => exit::SOLVER,
    }
}

fn threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_VAR} must be a positive integer, got {s:?}"))),
        },
    }
}

/// Runs one experiment. Assertion failures are recorded in the report;
/// errors mean the experiment could not be carried out.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut report = RunReport::new(cfg);
    pool.install(|| match cfg.experiment {
        Experiment::Lemmas => lemmas::run_lemmas(&mut report),
        Experiment::Validate => validate::run_validate(&mut report),
        Experiment::Contract => contract::run_contract(&mut report),
    })
    .map_err(|e| e.context(format!("{} experiment", cfg.experiment)))?;
    Ok(report)
}
