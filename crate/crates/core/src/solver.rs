//! Implicit radial solver for `∂t v = e^{-2v} (v'' + v'/r)` on a truncated
//! grid `[0, R_out]` with a Dirichlet condition at `R_out`.
//!
//! Each step is backward Euler, `w - v - dt e^{-2w} Δw = 0`, solved by Newton
//! with the exact tridiagonal Jacobian
//!
//! ```text
//! ∂R_i/∂w_i   = 1 - dt e^{-2w_i} (D_i - 2 (Δw)_i)
//! ∂R_i/∂w_i±1 = -dt e^{-2w_i} S_i±1
//! ```
//!
//! where `D`, `S` are the diagonal and off-diagonal Laplacian weights.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::barriers::cigar_flow;
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::metrics::{RadialProfile, SampledProfile};

/// Largest `|v|` accepted as initial data.
pub const V_LIMIT: f64 = 1e3;

/// Relative slack on `u >= e²` when checking the capped-cusp floor.
pub const FLOOR_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    grid: Arc<RadialGrid>,
    v: Vec<f64>,
    t: f64,
    /// `v >= floor` is asserted on the inner half of the grid after each step.
    floor: Option<f64>,
}

impl FlowState {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn floor(&self) -> Option<f64> {
        self.floor
    }

    pub fn to_profile(&self) -> Result<SampledProfile> {
        SampledProfile::new(self.grid.clone(), self.v.clone())
    }

    /// Discrete curvature `-e^{-2v} Δv` at every node.
    pub fn curvature(&self) -> Vec<f64> {
        let lap = self.grid.laplacian(&self.v);
        lap.iter().zip(&self.v).map(|(l, v)| -(-2.0 * v).exp() * l).collect()
    }

    /// Curvature at the nodes where its rounding error is below
    /// `rel_noise · max(|K|, 1)`; `None` elsewhere (the innermost nodes of a
    /// strongly clustered grid, where `v` is flat to within its ulp).
    pub fn resolved_curvature(&self, rel_noise: f64) -> Vec<Option<f64>> {
        resolved_curvature(&self.grid, &self.v, rel_noise)
    }
}

pub(crate) fn resolved_curvature(grid: &RadialGrid, v: &[f64], rel_noise: f64) -> Vec<Option<f64>> {
    let lap = grid.laplacian(v);
    let noise = grid.laplacian_noise(v);
    lap.iter()
        .zip(&noise)
        .zip(v)
        .map(|((&l, &e), &v)| {
            let scale = (-2.0 * v).exp();
            let k = -scale * l;
            (scale * e <= rel_noise * k.abs().max(1.0)).then_some(k)
        })
        .collect()
}

/// Default `rel_noise` for [`FlowState::resolved_curvature`].
pub const CURVATURE_NOISE: f64 = 1e-4;

/// Dirichlet data at the outer node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryRule {
    /// `u = (1 + 2t) h(R_out)`.
    ScaledCusp,
    /// `u = (1 + 2t) h̃(R_out)`, the homothetic hyperbolic disc.
    ScaledPoincare,
    /// The exact evolving cigar tangent to the cusp at `r0`.
    ExactCigar { r0: f64 },
    /// `u = (1 - 2Kt) u_sphere(R_out)`.
    ShrinkingSphere { beta: f64, curvature: f64 },
    Frozen { v_out: f64 },
}

impl BoundaryRule {
    pub fn value(&self, r_out: f64, t: f64) -> Result<f64> {
        match *self {
            BoundaryRule::ScaledCusp => {
                Ok(0.5 * (2.0 * t).ln_1p() + RadialProfile::Cusp { alpha: 1.0 }.v(r_out)?)
            }
            BoundaryRule::ScaledPoincare => {
                Ok(0.5 * (2.0 * t).ln_1p() + RadialProfile::Poincare.v(r_out)?)
            }
            BoundaryRule::ExactCigar { r0 } => cigar_flow(r0, r_out, t),
            BoundaryRule::ShrinkingSphere { beta, curvature } => {
                let scale = 1.0 - 2.0 * curvature * t;
                if !(scale > 0.0) {
                    return Err(Error::domain(format!(
                        "shrinking sphere with K = {curvature} is extinct at t = {t}"
                    )));
                }
                Ok(0.5 * scale.ln() + RadialProfile::sphere(beta, curvature)?.v(r_out)?)
            }
            BoundaryRule::Frozen { v_out } => Ok(v_out),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Additional cap `dt <= max(dt_init, dt_rel · t)`; `None` disables it.
    pub dt_rel: Option<f64>,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub grow: f64,
    pub shrink: f64,
    /// Grow `dt` after a step that converged in at most this many iterations.
    pub grow_below_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-8,
            dt_min: 1e-14,
            dt_max: 1e-2,
            dt_rel: Some(1e-3),
            newton_tol: 1e-10,
            newton_max_iters: 12,
            grow: 2.0,
            shrink: 0.5,
            grow_below_iters: 4,
        }
    }
}

impl SolverConfig {
    /// Fixed step `dt` throughout.
    pub fn fixed(dt: f64) -> Self {
        Self { dt_init: dt, dt_min: dt, dt_max: dt, dt_rel: None, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(Error::Config(format!(
                "need 0 < dt_min <= dt_init <= dt_max, got {:e}, {:e}, {:e}",
                self.dt_min, self.dt_init, self.dt_max
            )));
        }
        if !(self.newton_tol > 0.0 && self.newton_tol <= 1e-4) {
            return Err(Error::Config(format!("newton_tol {:e} outside (0, 1e-4]", self.newton_tol)));
        }
        if !(self.grow >= 1.0 && self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Config("step factors need grow >= 1 and 0 < shrink < 1".into()));
        }
        if self.newton_max_iters == 0 {
            return Err(Error::Config("newton_max_iters must be positive".into()));
        }
        Ok(())
    }

    fn cap(&self, t: f64) -> f64 {
        match self.dt_rel {
            Some(rel) => self.dt_max.min(self.dt_init.max(rel * t)),
            None => self.dt_max,
        }
    }
}

/// Samples `profile` on `grid` at `t = 0`.
pub fn init_state(profile: &RadialProfile, grid: Arc<RadialGrid>) -> Result<FlowState> {
    let mut v = Vec::with_capacity(grid.len());
    for &r in grid.nodes() {
        let x = profile.v(r)?;
        if !(x.abs() <= V_LIMIT) {
            return Err(Error::domain(format!("initial v = {x:e} at r = {r:e} exceeds {V_LIMIT:e}")));
        }
        v.push(x);
    }
    let floor = match profile {
        RadialProfile::CappedCusp { .. } if grid.r_out() <= 1.0 - 1e-3 => Some(1.0),
        _ => None,
    };
    Ok(FlowState { grid, v, t: 0.0, floor })
}

/// Builds a state from explicit values, for restarts and tests.
pub fn state_from_values(grid: Arc<RadialGrid>, v: Vec<f64>, t: f64) -> Result<FlowState> {
    let profile = SampledProfile::new(grid.clone(), v)?;
    if !(t >= 0.0) {
        return Err(Error::domain(format!("negative time {t}")));
    }
    Ok(FlowState { grid, v: profile.values().to_vec(), t, floor: None })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: FlowState,
    pub dt_taken: f64,
    /// Suggested next step, before clipping to sample times.
    pub dt_next: f64,
    pub newton_iters: usize,
    pub rejections: usize,
}

/// Newton solve of one backward-Euler step of size `dt`. Returns the new
/// values and iteration count, or the last residual on failure.
fn implicit_solve(
    grid: &RadialGrid,
    v: &[f64],
    v_out: f64,
    dt: f64,
    cfg: &SolverConfig,
) -> std::result::Result<(Vec<f64>, usize), f64> {
    let n = v.len();
    let mut w = v.to_vec();
    w[n - 1] = v_out;
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut last_residual = f64::INFINITY;
    for iter in 1..=cfg.newton_max_iters {
        let mut res_norm = 0.0f64;
        for i in 0..n - 1 {
            let s = grid.stencil(i);
            let lap = if i == 0 {
                s.diag * w[0] + s.upper * w[1]
            } else {
                s.lower * w[i - 1] + s.diag * w[i] + s.upper * w[i + 1]
            };
            let c = dt * (-2.0 * w[i]).exp();
            let r = w[i] - v[i] - c * lap;
            // Row-scaled so the residual stays in units of v where the
            // stencil weights are huge.
            res_norm = res_norm.max(r.abs() / (1.0 - c * s.diag));
            rhs[i] = -r;
            lower[i] = -c * s.lower;
            diag[i] = 1.0 - c * (s.diag - 2.0 * lap);
            upper[i] = -c * s.upper;
        }
        lower[n - 1] = 0.0;
        diag[n - 1] = 1.0;
        upper[n - 1] = 0.0;
        rhs[n - 1] = 0.0;
        last_residual = res_norm;
        if !res_norm.is_finite() {
            return Err(res_norm);
        }
        if res_norm <= cfg.newton_tol {
            return Ok((w, iter - 1));
        }
        if !thomas(&lower, &mut diag, &upper, &mut rhs) {
            return Err(res_norm);
        }
        let mut step = 0.0f64;
        for (wi, d) in w.iter_mut().zip(&rhs) {
            *wi += d;
            step = step.max(d.abs());
        }
        if !step.is_finite() || step > 10.0 {
            return Err(res_norm);
        }
        if step <= cfg.newton_tol {
            return Ok((w, iter));
        }
    }
    Err(last_residual)
}

/// In-place tridiagonal solve; the solution overwrites `rhs`.
fn thomas(lower: &[f64], diag: &mut [f64], upper: &[f64], rhs: &mut [f64]) -> bool {
    let n = diag.len();
    for i in 1..n {
        if diag[i - 1] == 0.0 {
            return false;
        }
        let m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    if diag[n - 1] == 0.0 {
        return false;
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
    rhs.iter().all(|x| x.is_finite())
}

/// One accepted backward-Euler step, starting from `dt` and halving on
/// Newton failure down to `dt_min`.
pub fn step(state: &FlowState, bc: &BoundaryRule, cfg: &SolverConfig, dt: f64) -> Result<StepOutcome> {
    let grid = &state.grid;
    let mut dt = dt.min(cfg.dt_max);
    let mut rejections = 0;
    loop {
        let t_new = state.t + dt;
        let v_out = bc.value(grid.r_out(), t_new)?;
        match implicit_solve(grid, &state.v, v_out, dt, cfg) {
            Ok((w, iters)) => {
                if w.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite { t: t_new });
                }
                let next = FlowState { grid: grid.clone(), v: w, t: t_new, floor: state.floor };
                check_floor(&next)?;
                let dt_next = if iters <= cfg.grow_below_iters { dt * cfg.grow } else { dt };
                return Ok(StepOutcome {
                    state: next,
                    dt_taken: dt,
                    dt_next: dt_next.min(cfg.dt_max),
                    newton_iters: iters,
                    rejections,
                });
            }
            Err(residual) => {
                if dt <= cfg.dt_min {
                    return Err(Error::StepFailed { t: state.t, dt, residual });
                }
                dt = (dt * cfg.shrink).max(cfg.dt_min);
                rejections += 1;
            }
        }
    }
}

fn check_floor(state: &FlowState) -> Result<()> {
    let Some(floor) = state.floor else { return Ok(()) };
    let half = state.grid.last_index_within(0.5 * state.grid.r_out());
    let slack = 0.5 * FLOOR_SLACK;
    for (i, &v) in state.v[..=half].iter().enumerate() {
        if v < floor - slack {
            return Err(Error::Invariant {
                t: state.t,
                detail: format!("v = {v} below {floor} at node {i}"),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub steps: usize,
    pub rejections: usize,
    pub newton_iters: usize,
    pub dt_smallest: f64,
    pub dt_largest: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<FlowState>,
    pub stats: SolverStats,
}

/// Advances `state` to every time in `sample_times`, landing on each one.
pub fn advance(
    mut state: FlowState,
    bc: &BoundaryRule,
    cfg: &SolverConfig,
    sample_times: &[f64],
) -> Result<Trajectory> {
    cfg.validate()?;
    if sample_times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("sample times must be strictly increasing".into()));
    }
    if sample_times.first().is_some_and(|&t| !(t > state.t)) {
        return Err(Error::Config(format!("sample times must exceed the start time {}", state.t)));
    }
    let mut stats = SolverStats { dt_smallest: f64::INFINITY, ..Default::default() };
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut dt = cfg.dt_init;
    for &target in sample_times {
        while state.t < target {
            let remaining = target - state.t;
            let nominal = dt.min(cfg.cap(state.t));
            // Stretch slightly to avoid a sliver step before the sample time.
            let landing = nominal >= remaining || nominal * 1.25 >= remaining;
            let trial = if landing { remaining } else { nominal };
            let out = step(&state, bc, cfg, trial)?;
            stats.steps += 1;
            stats.rejections += out.rejections;
            stats.newton_iters += out.newton_iters;
            stats.dt_smallest = stats.dt_smallest.min(out.dt_taken);
            stats.dt_largest = stats.dt_largest.max(out.dt_taken);
            let hit = landing && out.rejections == 0;
            state = out.state;
            if hit {
                state.t = target;
            }
            dt = if out.rejections > 0 { out.dt_next } else { out.dt_next.max(nominal) };
        }
        samples.push(state.clone());
    }
    if stats.steps == 0 {
        stats.dt_smallest = 0.0;
    }
    Ok(Trajectory { samples, stats })
}

/// `init_state` followed by [`advance`] up to `t_end`, sampling at
/// `sample_times` (which must lie in `(0, t_end]`).
pub fn run(
    profile: &RadialProfile,
    grid: Arc<RadialGrid>,
    bc: &BoundaryRule,
    cfg: &SolverConfig,
    t_end: f64,
    sample_times: &[f64],
) -> Result<Trajectory> {
    if sample_times.iter().any(|&t| !(t > 0.0 && t <= t_end)) {
        return Err(Error::Config(format!("sample times must lie in (0, {t_end}]")));
    }
    let state = init_state(profile, grid)?;
    advance(state, bc, cfg, sample_times)
}

/// Problems with a known solution, used for convergence studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExactCase {
    /// The cigar tangent to the cusp at `r0`, evolving by translation in `log δ`.
    Cigar { r0: f64 },
    ShrinkingSphere { beta: f64, curvature: f64 },
    /// The homothetic disc `(1 + 2t) h̃`.
    Poincare,
}

impl ExactCase {
    pub fn initial(&self) -> Result<RadialProfile> {
        match *self {
            ExactCase::Cigar { r0 } => crate::barriers::cigar_tangency(r0).map(|c| c.profile()),
            ExactCase::ShrinkingSphere { beta, curvature } => RadialProfile::sphere(beta, curvature),
            ExactCase::Poincare => Ok(RadialProfile::Poincare),
        }
    }

    pub fn boundary(&self) -> BoundaryRule {
        match *self {
            ExactCase::Cigar { r0 } => BoundaryRule::ExactCigar { r0 },
            ExactCase::ShrinkingSphere { beta, curvature } => {
                BoundaryRule::ShrinkingSphere { beta, curvature }
            }
            ExactCase::Poincare => BoundaryRule::ScaledPoincare,
        }
    }

    /// Exact `v(r, t)`.
    pub fn exact(&self, r: f64, t: f64) -> Result<f64> {
        match *self {
            ExactCase::Cigar { r0 } => cigar_flow(r0, r, t),
            ExactCase::ShrinkingSphere { beta, curvature } => {
                let scale = 1.0 - 2.0 * curvature * t;
                if !(scale > 0.0) {
                    return Err(Error::domain(format!("sphere extinct at t = {t}")));
                }
                Ok(0.5 * scale.ln() + RadialProfile::sphere(beta, curvature)?.v(r)?)
            }
            ExactCase::Poincare => Ok(0.5 * (2.0 * t).ln_1p() + RadialProfile::Poincare.v(r)?),
        }
    }

    /// Max nodal error of a state against the exact solution.
    pub fn max_error(&self, state: &FlowState) -> Result<f64> {
        let mut worst = 0.0f64;
        for (&r, &v) in state.grid.nodes().iter().zip(&state.v) {
            worst = worst.max((v - self.exact(r, state.t)?).abs());
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub nodes: Vec<usize>,
    pub spacings: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log h`.
    pub order: f64,
}

/// Observed spatial order on uniform grids of `sizes` nodes over
/// `[0, r_out]`, with `dt = dt_per_h2 · h²` so the time error scales like the
/// spatial one.
pub fn convergence_study(
    case: &ExactCase,
    r_out: f64,
    dt_per_h2: f64,
    t_probe: f64,
    sizes: &[usize],
) -> Result<ConvergenceReport> {
    if sizes.len() < 3 {
        return Err(Error::Config("convergence study needs at least 3 grids".into()));
    }
    let ratio = sizes[1] as f64 / sizes[0] as f64;
    let geometric = sizes.windows(2).all(|w| {
        let q = w[1] as f64 / w[0] as f64;
        q > 1.0 && ((q - ratio) / ratio).abs() < 1e-2
    });
    if !geometric {
        return Err(Error::Config(format!("grid sizes {sizes:?} are not a refining geometric sequence")));
    }
    let profile = case.initial()?;
    let bc = case.boundary();
    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    for &n in sizes {
        let grid = Arc::new(RadialGrid::uniform(n, r_out)?);
        let h = r_out / (n - 1) as f64;
        let steps = (t_probe / (dt_per_h2 * h * h)).ceil();
        let cfg = SolverConfig::fixed(t_probe / steps);
        let traj = run(&profile, grid, &bc, &cfg, t_probe, &[t_probe])?;
        errors.push(case.max_error(&traj.samples[0])?);
        spacings.push(h);
    }
    let order = log_log_slope(&spacings, &errors)?;
    Ok(ConvergenceReport { nodes: sizes.to_vec(), spacings, errors, order })
}

fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if y.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Fit("errors must be positive to fit an order".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

/// Sinh grid for a capped-cusp run: core scale equal to the cap radius, so
/// the cap lies in the transition from uniform to geometric spacing.
pub fn capped_cusp_grid(n_nodes: usize, r0: f64, r_out: f64) -> Result<RadialGrid> {
    RadialGrid::sinh(n_nodes, r0, r_out)
}
