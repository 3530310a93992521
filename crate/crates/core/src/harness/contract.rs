//! Cusp-contraction experiment: capped-cusp runs, per-time diagnostics, the
//! blow-up fit, and the independence comparisons.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::fit::rate_fit;
use super::report::{Assertion, Row, RunReport, RunSummary};
use crate::barriers::{curvature_witness, origin_lower_bound};
use crate::error::{Error, Result};
use crate::harnack::{gradient_bound_static, gradient_sup, liyau_conclusion_check, region_end};
use crate::metrics::RadialProfile;
use crate::solver::{capped_cusp_grid, run, BoundaryRule, FlowState, SolverConfig, Trajectory, CURVATURE_NOISE};

pub const ORIGIN_SLACK: f64 = 0.05;
pub const C_STABILITY: f64 = 0.2;
pub const P_RANGE: (f64, f64) = (1.7, 2.3);
pub const MIN_R_SQUARED: f64 = 0.98;
pub const WITNESS_SOUNDNESS_TOL: f64 = 1e-3;
pub const ANNULUS: (f64, f64) = (0.5, 0.8);
pub const ANNULUS_TOL: f64 = 0.05;
pub const LIYAU_RADIUS: f64 = 0.25;
pub const LIYAU_STABILITY: f64 = 0.1;
pub const GRADIENT_FACTOR: f64 = 1.2;
pub const AGREEMENT_RADIUS: f64 = 0.5;
pub const SENSITIVITY_RADIUS: f64 = 0.25;
pub const AGREEMENT_TOL: f64 = 1e-3;
pub const SANDWICH_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Role {
    Primary,
    Refined,
    Cap(usize),
    Outer(usize),
    LiYau(usize),
}

#[derive(Debug, Clone)]
struct Job {
    role: Role,
    label: String,
    r0: f64,
    nodes: usize,
    r_out: f64,
}

fn jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let r0 = cfg.primary_r0();
    let job = |role, label: String, r0, nodes, r_out| Job { role, label, r0, nodes, r_out };
    let mut out = vec![
        job(Role::Primary, format!("primary_{}", cfg.grid), r0, cfg.grid, cfg.r_out),
        job(Role::Refined, format!("refined_{}", cfg.grid_refined), r0, cfg.grid_refined, cfg.r_out),
    ];
    for (k, &other) in cfg.r0.iter().enumerate().filter(|(_, &x)| x != r0) {
        out.push(job(Role::Cap(k), format!("cap_e^{:.3}", other.ln()), other, cfg.grid, cfg.r_out));
    }
    for (k, &r_out) in cfg.r_out_sweep.iter().enumerate() {
        out.push(job(Role::Outer(k), format!("outer_{r_out}"), r0, cfg.grid, r_out));
    }
    for (k, &n) in cfg.liyau_grids.iter().enumerate() {
        out.push(job(Role::LiYau(k), format!("liyau_{n}"), r0, n, cfg.r_out));
    }
    out
}

/// Every run shares the clustering of the primary cap, so runs with equal
/// node counts and outer radii have identical nodes.
fn execute(job: &Job, core: f64, times: &[f64]) -> Result<Trajectory> {
    let grid = Arc::new(capped_cusp_grid(job.nodes, core, job.r_out)?);
    let profile = RadialProfile::capped_cusp(job.r0)?;
    let t_end = *times.last().expect("validated non-empty");
    run(&profile, grid, &BoundaryRule::ScaledCusp, &SolverConfig::default(), t_end, times)
}

fn max_resolved_curvature(state: &FlowState) -> f64 {
    let n = state.grid().len();
    state.resolved_curvature(CURVATURE_NOISE)[..n - 1]
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// All per-row diagnostics except the witness and Li-Yau columns.
fn row(state: &FlowState) -> Result<Row> {
    let t = state.t();
    let v = state.values();
    let nodes = state.grid().nodes();
    let n = nodes.len();
    let max_k = max_resolved_curvature(state);
    let k = state.resolved_curvature(CURVATURE_NOISE);
    let target = -1.0 / (1.0 + 2.0 * t);
    let mut annulus_dev = 0.0f64;
    for i in 0..n - 1 {
        if nodes[i] >= ANNULUS.0 && nodes[i] <= ANNULUS.1 {
            let ki = k[i].ok_or_else(|| Error::Invariant {
                t,
                detail: format!("curvature unresolved at r = {}", nodes[i]),
            })?;
            annulus_dev = annulus_dev.max((ki - target).abs());
        }
    }
    let shift = 0.5 * (2.0 * t).ln_1p();
    let (mut lower, mut upper) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n - 1 {
        let r = nodes[i];
        lower = lower.min((2.0 * (v[i] - shift - RadialProfile::Poincare.v(r)?)).exp_m1());
        if r > 0.0 {
            let h = RadialProfile::Cusp { alpha: 1.0 }.v(r)?;
            upper = upper.max((2.0 * (v[i] - shift - h)).exp_m1());
        }
    }
    let half = region_end(state.grid(), 0.5);
    let vmax = v[..=half].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Row {
        t,
        v0: v[0],
        t_v0: t * v[0],
        origin_bound: origin_lower_bound(t)?.v_bound,
        max_k,
        t2_max_k: t * t * max_k,
        witness_k0: None,
        t2_witness: None,
        liyau_sup: None,
        annulus_dev,
        sandwich_lower: lower,
        sandwich_upper: upper,
        t_vmax_half: t * vmax,
        grad_sup_half: gradient_sup(state, 0.5)?,
    })
}

fn in_window(t: f64, (lo, hi): (f64, f64)) -> bool {
    t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12)
}

/// `max_t (t · max_{B_{1/2}} v - 1) / t`: the least `C` with
/// `t · max v <= 1 + C t` over the window.
fn recorded_c(rows: &[Row], window: (f64, f64)) -> f64 {
    rows.iter()
        .filter(|r| in_window(r.t, window))
        .map(|r| (r.t_vmax_half - 1.0) / r.t)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn sample_at(traj: &Trajectory, t: f64) -> Result<&FlowState> {
    traj.samples
        .iter()
        .find(|s| (s.t() - t).abs() <= 1e-12 * t)
        .ok_or_else(|| Error::Config(format!("no sample at t = {t}")))
}

/// `max |a - b|` over nodes of `a` with `r <= radius`, interpolating `b`.
fn max_difference(a: &FlowState, b: &FlowState, radius: f64) -> f64 {
    let end = a.grid().last_index_within(radius);
    a.grid().nodes()[..=end]
        .iter()
        .zip(a.values())
        .map(|(&r, &va)| (va - b.grid().interpolate(b.values(), r)).abs())
        .fold(0.0, f64::max)
}

pub fn run_contract(report: &mut RunReport) -> Result<()> {
    let cfg = report.config.clone();
    let mut times = cfg.t_samples.clone();
    if !times.iter().any(|&t| (t - cfg.t_compare).abs() <= 1e-12 * cfg.t_compare) {
        times.push(cfg.t_compare);
        times.sort_by(f64::total_cmp);
    }
    let core = cfg.primary_r0();
    let jobs = jobs(&cfg);
    let results: Vec<Result<Trajectory>> = jobs.par_iter().map(|j| execute(j, core, &times)).collect();
    let mut runs = BTreeMap::new();
    for (job, res) in jobs.iter().zip(results) {
        let traj = res.map_err(|e| e.context(format!("run {}", job.label)))?;
        report.runs.push(RunSummary {
            label: job.label.clone(),
            r0: job.r0,
            nodes: job.nodes,
            r_out: job.r_out,
            stats: traj.stats.clone(),
        });
        runs.insert(job.role, traj);
    }
    let window = cfg.t_window;
    let primary = &runs[&Role::Primary];

    // Rows and witness.
    let mut rows = primary.samples.par_iter().map(row).collect::<Result<Vec<_>>>()?;
    let t_witness = (cfg.alpha * cfg.alpha - 1.0) / 2.0;
    let witnesses: Vec<Option<Result<f64>>> = primary
        .samples
        .par_iter()
        .map(|s| {
            (s.t() < t_witness).then(|| {
                let field = s.to_profile()?;
                curvature_witness(&field, s.t(), cfg.alpha, cfg.mu).map(|w| w.k0)
            })
        })
        .collect();
    let liyau = liyau_conclusion_check(&primary.samples, LIYAU_RADIUS)?;
    let mut precondition_failures = Vec::new();
    for (row, w) in rows.iter_mut().zip(witnesses) {
        match w {
            Some(Ok(k0)) => {
                row.witness_k0 = Some(k0);
                row.t2_witness = Some(row.t * row.t * k0);
            }
            Some(Err(Error::Precondition(msg))) => precondition_failures.push(format!("t = {}: {msg}", row.t)),
            Some(Err(e)) => return Err(e.context(format!("witness at t = {}", row.t))),
            None => {}
        }
        row.liyau_sup = liyau.windows.iter().find(|w| w.t1 == row.t).map(|w| w.sup);
    }
    let window_rows: Vec<&Row> = rows.iter().filter(|r| in_window(r.t, window)).collect();
    if window_rows.is_empty() {
        return Err(Error::Config(format!("no sample times in the window {window:?}")));
    }

    // Origin lower bound and the 1/t + C upper bound.
    let deficit = window_rows.iter().map(|r| 1.0 - r.v0 / r.origin_bound).fold(f64::NEG_INFINITY, f64::max);
    report.assertions.push(Assertion::at_most(
        "c3a_origin_lower_bound",
        deficit,
        ORIGIN_SLACK,
        "max (1 - v(0,t) / (1/(8t) + (1 + log 4t)/2)) over the window",
    ));
    let c_primary = recorded_c(&rows, window);
    let refined_rows = runs[&Role::Refined].samples.par_iter().map(row).collect::<Result<Vec<_>>>()?;
    let c_refined = recorded_c(&refined_rows, window);
    report.metrics.insert("recorded_c".into(), c_primary);
    report.metrics.insert("recorded_c_refined".into(), c_refined);
    report.assertions.push(Assertion::at_most(
        "c3b_upper_bound_constant_stable",
        ((c_refined - c_primary) / c_primary).abs(),
        C_STABILITY,
        format!("C = {c_primary} on {} nodes vs {c_refined} on {}", cfg.grid, cfg.grid_refined),
    ));

    let lower = rows.iter().map(|r| r.sandwich_lower).fold(f64::INFINITY, f64::min);
    let upper = rows.iter().map(|r| r.sandwich_upper).fold(f64::NEG_INFINITY, f64::max);
    report.assertions.push(Assertion::at_least(
        "sandwich_lower",
        lower,
        -SANDWICH_SLACK,
        "min (u / ((1 + 2t) h~) - 1) over interior nodes and samples",
    ));
    report.assertions.push(Assertion::at_most(
        "sandwich_upper",
        upper,
        SANDWICH_SLACK,
        "max (u / ((1 + 2t) h) - 1) over interior nodes and samples",
    ));

    // Blow-up exponent and witness floor.
    let fit = rate_fit(&rows.iter().map(|r| (r.t, r.max_k)).collect::<Vec<_>>(), window)?;
    report.fit = Some(fit);
    report.assertions.push(Assertion::within("c4_exponent", fit.p, P_RANGE.0, P_RANGE.1, "fitted p of max K ~ c t^-p"));
    report.assertions.push(Assertion::at_least("c4_fit_quality", fit.r_squared, MIN_R_SQUARED, "R^2 of the log-log fit"));
    let k_init = {
        let l = -core.ln();
        2.0 * l * (l - 1.0)
    };
    let design_lo = 3.0 / k_init.sqrt();
    report.metrics.insert("design_window_t_lo".into(), design_lo);
    if let Ok(f) = rate_fit(&rows.iter().map(|r| (r.t, r.max_k)).collect::<Vec<_>>(), (design_lo, window.1)) {
        report.metrics.insert("design_window_p".into(), f.p);
        report.metrics.insert("design_window_r_squared".into(), f.r_squared);
    }
    let witness_rows: Vec<&Row> = window_rows.iter().copied().filter(|r| r.witness_k0.is_some()).collect();
    let floor = witness_rows.iter().filter_map(|r| r.t2_witness).fold(f64::INFINITY, f64::min);
    report.assertions.push(Assertion::at_least(
        "c4_witness_floor",
        if witness_rows.is_empty() { f64::NAN } else { floor },
        1.0 / cfg.c1,
        format!("min t^2 K0 over {} rows with t < (alpha^2 - 1)/2", witness_rows.len()),
    ));
    let excess = rows
        .iter()
        .filter_map(|r| r.witness_k0.map(|k0| k0 / r.max_k - 1.0))
        .fold(f64::NEG_INFINITY, f64::max);
    report.assertions.push(Assertion::at_most(
        "c4_witness_sound",
        excess,
        WITNESS_SOUNDNESS_TOL,
        "max (K0 / max K - 1)",
    ));
    report.assertions.push(Assertion::at_most(
        "c4_witness_precondition",
        precondition_failures.len() as f64,
        0.0,
        precondition_failures.first().map_or("rows where u < alpha^2 h or v(0) >= mu/t fails".into(), |m| {
            format!("first: {m}")
        }),
    ));

    // Curvature approaching the rescaled hyperbolic value away from the origin.
    let dev = window_rows.iter().map(|r| r.annulus_dev).fold(0.0, f64::max);
    report.assertions.push(Assertion::at_most(
        "c5_annulus_curvature",
        dev,
        ANNULUS_TOL,
        "max |K + 1/(1 + 2t)| on 0.5 <= r <= 0.8",
    ));

    // Li-Yau conclusion under refinement and the dynamic gradient bound.
    let mut sups = Vec::new();
    for (k, &n) in cfg.liyau_grids.iter().enumerate() {
        let traj = &runs[&Role::LiYau(k)];
        let rep = liyau_conclusion_check(&traj.samples, LIYAU_RADIUS)?;
        let used: Vec<_> = rep.windows.iter().filter(|w| in_window(w.t1, window)).collect();
        let failing = used.iter().filter(|w| !w.hypothesis_holds).count();
        let sup = used.iter().filter(|w| w.hypothesis_holds).map(|w| w.sup).fold(f64::NEG_INFINITY, f64::max);
        report.metrics.insert(format!("liyau_sup_{n}"), sup);
        report.assertions.push(Assertion::at_most(
            &format!("c6_liyau_hypothesis_{n}"),
            failing as f64,
            0.0,
            format!("windows violating max_(B_1/2) v <= 2/t, of {}", used.len()),
        ));
        sups.push(sup);
    }
    if let [a, b, ..] = sups[..] {
        report.assertions.push(Assertion::at_most(
            "c6_liyau_stable",
            (b / a - 1.0).abs(),
            LIYAU_STABILITY,
            format!("sup (t - t1) K / v on B_1/4: {a} vs {b}"),
        ));
    }
    let static_bound = gradient_bound_static(core, 20_000)?.sup;
    let mut dynamic = rows.iter().map(|r| r.grad_sup_half).fold(f64::NEG_INFINITY, f64::max);
    for k in 0..cfg.liyau_grids.len() {
        for s in &runs[&Role::LiYau(k)].samples {
            dynamic = dynamic.max(gradient_sup(s, 0.5)?);
        }
    }
    report.metrics.insert("static_gradient_bound".into(), static_bound);
    report.metrics.insert("dynamic_gradient_sup".into(), dynamic);
    report.assertions.push(Assertion::at_most(
        "c6_dynamic_gradient",
        dynamic / static_bound,
        GRADIENT_FACTOR,
        "sup |grad log v|^2_u on B_1/2 over the static bound",
    ));

    // Independence of the cap and of the truncation radius.
    let reference = sample_at(primary, cfg.t_compare)?;
    for (k, &other) in cfg.r0.iter().enumerate().filter(|(_, &x)| x != core) {
        let s = sample_at(&runs[&Role::Cap(k)], cfg.t_compare)?;
        let d = max_difference(reference, s, AGREEMENT_RADIUS);
        report.metrics.insert(format!("cap_difference_e^{:.3}", other.ln()), d);
        report.assertions.push(Assertion::at_most(
            &format!("c7_cap_independence_e^{:.0}", other.ln()),
            d,
            AGREEMENT_TOL,
            format!("max |v| difference on r <= {AGREEMENT_RADIUS} at t = {}", cfg.t_compare),
        ));
    }
    for (k, &r_out) in cfg.r_out_sweep.iter().enumerate() {
        let s = sample_at(&runs[&Role::Outer(k)], cfg.t_compare)?;
        let d = max_difference(reference, s, SENSITIVITY_RADIUS);
        report.metrics.insert(format!("outer_difference_{r_out}"), d);
        report.assertions.push(Assertion::at_most(
            &format!("c7_outer_radius_{r_out}"),
            d,
            AGREEMENT_TOL,
            format!("max |v| difference on r <= {SENSITIVITY_RADIUS} at t = {}", cfg.t_compare),
        ));
    }

    // Smoothing constant sup (log u - 2/t) on B_1/2, recorded per cap.
    let smoothing = |rows: &[Row]| rows.iter().map(|r| 2.0 * (r.t_vmax_half - 1.0) / r.t).fold(f64::NEG_INFINITY, f64::max);
    report.metrics.insert("smoothing_constant".into(), smoothing(&rows));
    report.rows = rows;
    Ok(())
}
