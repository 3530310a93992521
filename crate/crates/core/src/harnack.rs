//! The Li-Yau quantity for `f = log v`,
//!
//! ```text
//! F = |∇f|²_u + tK/v = (1 - t)|∇f|²_u - t Δ_u f,
//! ```
//!
//! the closed-form gradient bound on capped cusps, and a numerical check of
//! the conclusion `K <= C v / t` on short time windows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::metrics::{tangent_cigar, HORIZON};
use crate::solver::{resolved_curvature, FlowState, CURVATURE_NOISE};

/// `|∇ log v|²_u` on the cigar part `r <= r0` of the capped cusp:
/// `(1/ε) (1 / (1 + δ/r²)) · 4 / (log ε - log(δ + r²))²`.
pub fn static_cigar_part(r0: f64, r: f64) -> Result<f64> {
    let (eps, delta) = tangent_cigar(r0)?;
    if !(r >= 0.0 && r <= r0) {
        return Err(Error::domain(format!("r = {r:e} outside the cap [0, {r0:e}]")));
    }
    let denom = eps.ln() - (delta + r * r).ln();
    Ok(4.0 / (eps * (1.0 + delta / (r * r)) * denom * denom))
}

/// `|∇ log v|²_u` on the unit cusp: `(log r + 1)² / (log |r log r|)²`.
pub fn static_cusp_part(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < HORIZON) {
        return Err(Error::domain(format!("cusp gradient needs r in (0, e^-1), got {r:e}")));
    }
    Ok(static_cusp_part_log(-r.ln()))
}

/// [`static_cusp_part`] at `r = e^{-l}`, for radii below the floating-point
/// range.
pub fn static_cusp_part_log(l: f64) -> f64 {
    let d = l - l.ln();
    (l - 1.0) * (l - 1.0) / (d * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticBound {
    pub sup: f64,
    pub at_radius: f64,
    pub cigar_sup: f64,
    pub cusp_sup: f64,
}

/// Supremum of `|∇ log v|²_u` for the capped cusp at `r0`, sampled
/// log-uniformly. Fails if the cigar part is not increasing in `r`.
///
/// Beyond `e^{-1}` the cusp has `v < 1`; the samples stop there.
pub fn gradient_bound_static(r0: f64, n_samples: usize) -> Result<StaticBound> {
    tangent_cigar(r0)?;
    if n_samples < 2 {
        return Err(Error::Precondition("need at least 2 samples".into()));
    }
    let s0 = r0.ln();
    let s_lo = s0 - 40.0;
    let mut out = StaticBound {
        sup: f64::NEG_INFINITY,
        at_radius: f64::NAN,
        cigar_sup: f64::NEG_INFINITY,
        cusp_sup: f64::NEG_INFINITY,
    };
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=n_samples {
        let r = (s_lo + (s0 - s_lo) * i as f64 / n_samples as f64).exp().min(r0);
        let f = static_cigar_part(r0, r)?;
        if !(f > prev) {
            return Err(Error::Invariant {
                t: 0.0,
                detail: format!("cigar gradient not increasing at r = {r:e}"),
            });
        }
        prev = f;
        out.cigar_sup = out.cigar_sup.max(f);
        if f > out.sup {
            out.sup = f;
            out.at_radius = r;
        }
    }
    let s_hi = HORIZON.ln();
    for i in 1..n_samples {
        let r = (s0 + (s_hi - s0) * i as f64 / n_samples as f64).exp();
        let f = static_cusp_part(r)?;
        out.cusp_sup = out.cusp_sup.max(f);
        if f > out.sup {
            out.sup = f;
            out.at_radius = r;
        }
    }
    Ok(out)
}

/// Which of the two spatial expressions of the Li-Yau quantity to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarnackForm {
    /// `|∇f|²_u + tK/v`.
    Curvature,
    /// `(1 - t)|∇f|²_u - t Δ_u f`.
    Laplacian,
}

/// The Li-Yau quantity on the inner half of the grid. Nodes whose discrete
/// second derivatives are dominated by rounding are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnackField {
    pub t: f64,
    pub form: HarnackForm,
    pub radii: Vec<f64>,
    pub values: Vec<Option<f64>>,
}

impl HarnackField {
    pub fn max(&self) -> Option<f64> {
        self.values.iter().flatten().copied().reduce(f64::max)
    }
}

/// Index of the last node used by the interior diagnostics: `r <= radius`,
/// at most half the grid and one node clear of the boundary.
pub fn region_end(grid: &RadialGrid, radius: f64) -> usize {
    let half = grid.last_index_within(0.5 * grid.r_out());
    grid.last_index_within(radius).min(half).min(grid.len() - 2)
}

fn require_v_at_least_one(state: &FlowState, end: usize) -> Result<()> {
    if let Some(i) = state.values()[..=end].iter().position(|&v| !(v >= 1.0)) {
        return Err(Error::Precondition(format!(
            "v = {} < 1 at r = {:e}; log v is not defined as a positive quantity",
            state.values()[i],
            state.grid().nodes()[i]
        )));
    }
    Ok(())
}

/// `|∇ log v|²_u` at nodes `0..=end`.
fn gradient_sq(state: &FlowState, end: usize) -> Vec<f64> {
    let v = state.values();
    let dv = state.grid().gradient(v);
    (0..=end).map(|i| (-2.0 * v[i]).exp() * (dv[i] / v[i]).powi(2)).collect()
}

/// `sup |∇ log v|²_u` over nodes with `r <= radius`.
pub fn gradient_sup(state: &FlowState, radius: f64) -> Result<f64> {
    let end = region_end(state.grid(), radius);
    require_v_at_least_one(state, end)?;
    Ok(gradient_sq(state, end).into_iter().fold(0.0, f64::max))
}

/// Li-Yau quantity in the requested form on the inner half of the grid.
pub fn harnack_f(state: &FlowState, form: HarnackForm) -> Result<HarnackField> {
    let t = state.t();
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("Li-Yau quantity needs t > 0, got {t}")));
    }
    let grid = state.grid();
    let end = region_end(grid, grid.r_out());
    require_v_at_least_one(state, end)?;
    let v = state.values();
    let g = gradient_sq(state, end);
    let values = match form {
        HarnackForm::Curvature => {
            let k = resolved_curvature(grid, v, CURVATURE_NOISE);
            (0..=end).map(|i| k[i].map(|k| g[i] + t * k / v[i])).collect()
        }
        HarnackForm::Laplacian => {
            let f: Vec<f64> = v.iter().map(|x| x.ln()).collect();
            let lap = grid.laplacian(&f);
            let noise = grid.laplacian_noise(&f);
            (0..=end)
                .map(|i| {
                    let scale = (-2.0 * v[i]).exp();
                    let lap_u = scale * lap[i];
                    let ok = scale * noise[i] * v[i] <= CURVATURE_NOISE * (lap_u * v[i]).abs().max(1.0);
                    ok.then(|| (1.0 - t) * g[i] - t * lap_u)
                })
                .collect()
        }
    };
    Ok(HarnackField { t, form, radii: grid.nodes()[..=end].to_vec(), values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiYauWindow {
    pub t1: f64,
    pub t_end: f64,
    /// `max_{B_{1/2}} v` over the window's samples.
    pub max_v_half: f64,
    /// `max_{B_{1/2}} v <= 2/t` held at every sample in the window.
    pub hypothesis_holds: bool,
    /// `sup (t - t1) K / v` over the region and the window's samples.
    pub sup: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiYauReport {
    pub region_radius: f64,
    pub windows: Vec<LiYauWindow>,
    /// Largest window supremum over windows whose hypothesis holds.
    pub sup: f64,
}

/// Measures `sup (t - t1) K / v` on `B_{region_radius}` over every window
/// `[t1, 17 t1 / 16]` starting at a sample time, using the samples that fall
/// inside it. Windows where `max_{B_{1/2}} v <= 2/t` fails at some sample are
/// reported but excluded from the supremum.
pub fn liyau_conclusion_check(samples: &[FlowState], region_radius: f64) -> Result<LiYauReport> {
    if !(region_radius > 0.0 && region_radius <= 0.25) {
        return Err(Error::Precondition(format!(
            "region radius {region_radius} outside (0, 1/4]"
        )));
    }
    let mut windows = Vec::new();
    for (k, first) in samples.iter().enumerate() {
        let t1 = first.t();
        if !(t1 > 0.0) {
            continue;
        }
        let t_end = 17.0 * t1 / 16.0;
        let mut window = LiYauWindow {
            t1,
            t_end,
            max_v_half: f64::NEG_INFINITY,
            hypothesis_holds: true,
            sup: f64::NEG_INFINITY,
            samples: 0,
        };
        for s in samples[k..].iter().take_while(|s| s.t() <= t_end * (1.0 + 1e-12)) {
            let grid = s.grid();
            let half = region_end(grid, 0.5);
            let vmax = s.values()[..=half].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            window.max_v_half = window.max_v_half.max(vmax);
            window.hypothesis_holds &= vmax <= 2.0 / s.t();
            window.samples += 1;
            let tau = s.t() - t1;
            let end = region_end(grid, region_radius);
            require_v_at_least_one(s, end)?;
            let k = resolved_curvature(grid, s.values(), CURVATURE_NOISE);
            for i in 0..=end {
                if let Some(k) = k[i] {
                    window.sup = window.sup.max(tau * k / s.values()[i]);
                }
            }
        }
        if window.samples >= 2 {
            windows.push(window);
        }
    }
    let sup = windows
        .iter()
        .filter(|w| w.hypothesis_holds)
        .map(|w| w.sup)
        .reduce(f64::max)
        .ok_or_else(|| Error::SearchFailed("no feasible Li-Yau window in the trajectory".into()))?;
    Ok(LiYauReport { region_radius, windows, sup })
}
