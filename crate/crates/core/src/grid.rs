//! Nonuniform radial meshes on `[0, R_out]` and the discrete operators shared by
//! the solver and the sampled-profile diagnostics.
//!
//! The radial Laplacian `v'' + v'/r` is discretised in flux form,
//!
//! ```text
//! (Δv)_i = [ r_{i+½} (v_{i+1} - v_i)/h₊ - r_{i-½} (v_i - v_{i-1})/h₋ ] / A_i,
//! A_i    = (r_{i+½}² - r_{i-½}²) / 2,
//! ```
//!
//! which reduces to the axisymmetric stencil `4 (v_1 - v_0) / r_1²` on the
//! origin cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of intervals in a grid.
pub const MIN_INTERVALS: usize = 16;

/// How the nodes were laid out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Clustering {
    Uniform,
    /// `r(ξ) = core · sinh(ξ · asinh(R_out / core))`: uniform spacing ≈ `core`
    /// scale near the origin, geometric growth beyond it.
    Sinh { core: f64, ratio: f64 },
    Custom,
}

/// Tridiagonal row of the discrete radial Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub lower: f64,
    pub diag: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    clustering: Clustering,
    stencils: Vec<Stencil>,
}

impl RadialGrid {
    /// Builds a grid from explicit nodes. The first node must be the origin.
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        Self::with_clustering(nodes, Clustering::Custom)
    }

    fn with_clustering(nodes: Vec<f64>, clustering: Clustering) -> Result<Self> {
        if nodes.len() < MIN_INTERVALS + 1 {
            return Err(Error::InvalidGrid(format!(
                "need at least {} nodes, got {}",
                MIN_INTERVALS + 1,
                nodes.len()
            )));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidGrid(format!("first node must be 0, got {}", nodes[0])));
        }
        if let Some(w) = nodes.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "nodes not strictly increasing near {:e} -> {:e}",
                w[0], w[1]
            )));
        }
        let r_out = *nodes.last().unwrap();
        if r_out >= 1.0 {
            return Err(Error::InvalidGrid(format!("outer radius {r_out} must be < 1")));
        }
        let stencils = build_stencils(&nodes);
        Ok(Self { nodes, clustering, stencils })
    }

    /// `n_nodes` equally spaced nodes on `[0, r_out]`.
    pub fn uniform(n_nodes: usize, r_out: f64) -> Result<Self> {
        let n = n_nodes.saturating_sub(1).max(1);
        let nodes = (0..n_nodes).map(|i| r_out * i as f64 / n as f64).collect();
        Self::with_clustering(nodes, Clustering::Uniform)
    }

    /// `n_nodes` nodes clustered geometrically toward the origin with an
    /// approximately uniform core of spacing `core · asinh(r_out/core) / n`.
    pub fn sinh(n_nodes: usize, core: f64, r_out: f64) -> Result<Self> {
        if !(core > 0.0) {
            return Err(Error::InvalidGrid(format!("core scale must be positive, got {core}")));
        }
        let n = n_nodes.saturating_sub(1).max(1);
        let b = (r_out / core).asinh();
        let mut nodes: Vec<f64> = (0..n_nodes)
            .map(|i| core * (b * i as f64 / n as f64).sinh())
            .collect();
        if let Some(last) = nodes.last_mut() {
            *last = r_out;
        }
        let ratio = (b / n as f64).exp();
        Self::with_clustering(nodes, Clustering::Sinh { core, ratio })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_out(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn clustering(&self) -> Clustering {
        self.clustering
    }

    /// Laplacian row at node `i`; only meaningful for `i < len - 1`.
    pub fn stencil(&self, i: usize) -> Stencil {
        self.stencils[i]
    }

    /// Index of the last node with `r <= radius`.
    pub fn last_index_within(&self, radius: f64) -> usize {
        self.nodes.partition_point(|&r| r <= radius).saturating_sub(1)
    }

    /// Discrete radial Laplacian at every node. Interior nodes use the flux
    /// stencil; the outer node uses a one-sided quadratic fit.
    pub fn laplacian(&self, v: &[f64]) -> Vec<f64> {
        let n = self.nodes.len();
        let mut out = vec![0.0; n];
        out[0] = self.stencils[0].diag * v[0] + self.stencils[0].upper * v[1];
        for i in 1..n - 1 {
            let s = self.stencils[i];
            out[i] = s.lower * v[i - 1] + s.diag * v[i] + s.upper * v[i + 1];
        }
        let (d1, d2) = one_sided_derivatives(&self.nodes[n - 3..], &v[n - 3..]);
        out[n - 1] = d2 + d1 / self.nodes[n - 1];
        out
    }

    /// Rounding-error bound for [`laplacian`](Self::laplacian) at each node:
    /// close to the origin the stencil weights grow like `1/r²` while `v`
    /// varies by less than its own ulp, and the discrete Laplacian is noise.
    pub fn laplacian_noise(&self, v: &[f64]) -> Vec<f64> {
        let n = self.nodes.len();
        let eps = 4.0 * f64::EPSILON;
        let mut out = vec![0.0; n];
        let s = self.stencils[0];
        out[0] = eps * (s.diag.abs() * v[0].abs() + s.upper.abs() * v[1].abs());
        for i in 1..n - 1 {
            let s = self.stencils[i];
            out[i] = eps
                * (s.lower.abs() * v[i - 1].abs()
                    + s.diag.abs() * v[i].abs()
                    + s.upper.abs() * v[i + 1].abs());
        }
        let h = self.nodes[n - 1] - self.nodes[n - 2];
        out[n - 1] = eps * 8.0 * v[n - 3..].iter().map(|x| x.abs()).fold(0.0, f64::max) / (h * h);
        out
    }

    /// Nodal radial derivative: zero at the origin, central three-point in
    /// the interior, one-sided quadratic at the outer node.
    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let n = self.nodes.len();
        let r = &self.nodes;
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            let hm = r[i] - r[i - 1];
            let hp = r[i + 1] - r[i];
            out[i] = (hm * hm * (v[i + 1] - v[i]) + hp * hp * (v[i] - v[i - 1]))
                / (hp * hm * (hp + hm));
        }
        out[n - 1] = one_sided_derivatives(&r[n - 3..], &v[n - 3..]).0;
        out
    }

    /// Linear interpolation of nodal values at `r ∈ [0, R_out]`.
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        let k = self.nodes.partition_point(|&x| x <= r);
        if k == 0 {
            return values[0];
        }
        if k >= self.nodes.len() {
            return values[self.nodes.len() - 1];
        }
        let (r0, r1) = (self.nodes[k - 1], self.nodes[k]);
        let s = (r - r0) / (r1 - r0);
        values[k - 1] + s * (values[k] - values[k - 1])
    }
}

fn build_stencils(r: &[f64]) -> Vec<Stencil> {
    let n = r.len();
    let mut stencils = Vec::with_capacity(n);
    let c0 = 4.0 / (r[1] * r[1]);
    stencils.push(Stencil { lower: 0.0, diag: -c0, upper: c0 });
    for i in 1..n - 1 {
        let hm = r[i] - r[i - 1];
        let hp = r[i + 1] - r[i];
        let rm = 0.5 * (r[i] + r[i - 1]);
        let rp = 0.5 * (r[i + 1] + r[i]);
        let area = 0.5 * (rp - rm) * (rp + rm);
        let upper = rp / (hp * area);
        let lower = rm / (hm * area);
        stencils.push(Stencil { lower, diag: -(upper + lower), upper });
    }
    stencils.push(Stencil { lower: 0.0, diag: 0.0, upper: 0.0 });
    stencils
}

/// First and second derivative at the last of three points from the
/// interpolating quadratic.
fn one_sided_derivatives(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (x0, x1, x2) = (x[0], x[1], x[2]);
    let (y0, y1, y2) = (y[0], y[1], y[2]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let second = 2.0 * (d12 - d01) / (x2 - x0);
    let first = d12 + 0.5 * second * (x2 - x1);
    (first, second)
}
