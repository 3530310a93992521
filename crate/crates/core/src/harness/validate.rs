//! Solver validation against exact solutions.

use std::sync::Arc;

use rayon::prelude::*;

use super::report::{Assertion, RunReport, RunSummary};
use crate::error::Result;
use crate::grid::RadialGrid;
use crate::solver::{convergence_study, run, ConvergenceReport, ExactCase, SolverConfig};

pub const VALIDATION_NODES: usize = 4096;
pub const VALIDATION_T: f64 = 0.1;
pub const MAX_ERROR: f64 = 1e-4;
pub const ORDER_RANGE: (f64, f64) = (1.7, 2.3);
pub const STUDY_SIZES: [usize; 3] = [512, 1024, 2048];

/// `dt = DT_PER_H2 · h²` in the convergence studies.
const DT_PER_H2: f64 = 50.0;

pub fn cases() -> [(&'static str, ExactCase); 2] {
    [
        ("cigar", ExactCase::Cigar { r0: (-2.0f64).exp() }),
        ("sphere", ExactCase::ShrinkingSphere { beta: 2.0, curvature: 1.0 }),
    ]
}

/// Max nodal error at [`VALIDATION_T`] on a uniform grid of `nodes` points.
pub fn exact_case_error(case: &ExactCase, nodes: usize, r_out: f64) -> Result<(f64, RunSummary)> {
    let grid = Arc::new(RadialGrid::uniform(nodes, r_out)?);
    let cfg = SolverConfig { dt_rel: Some(1e-4), dt_max: 1e-5, ..SolverConfig::default() };
    let traj = run(&case.initial()?, grid, &case.boundary(), &cfg, VALIDATION_T, &[VALIDATION_T])?;
    let err = case.max_error(&traj.samples[0])?;
    let summary = RunSummary { label: String::new(), r0: f64::NAN, nodes, r_out, stats: traj.stats };
    Ok((err, summary))
}

pub fn order_study(case: &ExactCase, r_out: f64) -> Result<ConvergenceReport> {
    convergence_study(case, r_out, DT_PER_H2, VALIDATION_T, &STUDY_SIZES)
}

pub fn run_validate(report: &mut RunReport) -> Result<()> {
    let r_out = report.config.r_out;
    let results: Vec<_> = cases()
        .into_par_iter()
        .map(|(name, case)| {
            let err = exact_case_error(&case, VALIDATION_NODES, r_out);
            let study = order_study(&case, r_out);
            (name, err, study)
        })
        .collect();
    for (name, err, study) in results {
        match err {
            Ok((e, mut summary)) => {
                report.assertions.push(Assertion::at_most(
                    &format!("{name}_error_t0.1"),
                    e,
                    MAX_ERROR,
                    format!("max nodal |v - v_exact| on {VALIDATION_NODES} nodes"),
                ));
                summary.label = format!("{name}_{VALIDATION_NODES}");
                report.runs.push(summary);
            }
            Err(e) => report.assertions.push(Assertion::error(&format!("{name}_error_t0.1"), &e)),
        }
        match study {
            Ok(s) => {
                for (n, e) in s.nodes.iter().zip(&s.errors) {
                    report.metrics.insert(format!("{name}_error_{n}"), *e);
                }
                report.assertions.push(Assertion::within(
                    &format!("{name}_order"),
                    s.order,
                    ORDER_RANGE.0,
                    ORDER_RANGE.1,
                    format!("observed order over {:?}", s.nodes),
                ));
            }
            Err(e) => report.assertions.push(Assertion::error(&format!("{name}_order"), &e)),
        }
    }
    Ok(())
}
