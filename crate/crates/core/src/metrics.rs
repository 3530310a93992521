//! Radially symmetric conformal metrics `u (dx² + dy²)` on subsets of the
//! plane, always handled through the log form `v = ½ log u`.
//!
//! Closed-form variants provide exact `v`, `v'`, `v''`; curvature is
//! `K = -e^{-2v} (v'' + v'/r)`, with `v'/r → v''(0)` at the origin.

use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::quadrature;

/// `e^{-1}`, the horizon of the cigar and sphere tangency families.
pub const HORIZON: f64 = 0.367_879_441_171_442_33;

/// Relative tolerance used by [`l1_distance`].
pub const L1_REL_TOL: f64 = 1e-8;

/// Nodal values of `v` on a radial grid, interpolated linearly in `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    grid: Arc<RadialGrid>,
    v: Vec<f64>,
}

impl SampledProfile {
    pub fn new(grid: Arc<RadialGrid>, v: Vec<f64>) -> Result<Self> {
        if v.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} nodes",
                v.len(),
                grid.len()
            )));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::domain(format!("non-finite v at node {i}")));
        }
        Ok(Self { grid, v })
    }

    /// Samples a closed-form profile at every node of `grid`.
    pub fn from_profile(profile: &RadialProfile, grid: Arc<RadialGrid>) -> Result<Self> {
        let v = grid.nodes().iter().map(|&r| profile.v(r)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, v)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    /// Discrete curvature at every node.
    pub fn nodal_curvature(&self) -> Vec<f64> {
        let lap = self.grid.laplacian(&self.v);
        lap.iter().zip(&self.v).map(|(l, v)| -(-2.0 * v).exp() * l).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RadialProfile {
    /// `α² / (r² (log r)²)` on `(0, 1)`: the hyperbolic cusp scaled by `α`.
    Cusp { alpha: f64 },
    /// `(2 / (1 - r²))²` on `[0, 1)`.
    Poincare,
    /// `ε / (δ + r²)`.
    Cigar { eps: f64, delta: f64 },
    /// `β² / (1 + β² K r² / 4)²`, constant curvature `K`.
    Sphere { beta: f64, curvature: f64 },
    /// Cigar tangent to the cusp at `r0` inside, cusp outside.
    CappedCusp { r0: f64 },
    /// Constant `u = e^{2v}`.
    Flat { v: f64 },
    Sampled(SampledProfile),
}

/// Serializable tag naming a profile, used in report config echoes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileTag {
    Cusp { alpha: f64 },
    Poincare,
    Cigar { eps: f64, delta: f64 },
    Sphere { beta: f64, curvature: f64 },
    CappedCusp { r0: f64 },
    Flat { v: f64 },
    Sampled { nodes: usize },
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}

/// Cigar parameters `(ε, δ)` tangent to the unit cusp at `r0`.
pub(crate) fn tangent_cigar(r0: f64) -> Result<(f64, f64)> {
    require(r0 > 0.0 && r0 < HORIZON, || {
        format!("tangency radius {r0:e} outside (0, e^-1)")
    })?;
    let l = -r0.ln();
    let delta = r0 * r0 / (l - 1.0);
    require(delta > 0.0, || format!("tangency radius {r0:e} too small to represent delta"))?;
    Ok((1.0 / ((l - 1.0) * l), delta))
}

fn cusp_derivs(alpha: f64, r: f64) -> (f64, f64, f64) {
    let l = -r.ln();
    let v = alpha.ln() + l - l.ln();
    let d1 = (-1.0 + 1.0 / l) / r;
    let d2 = (1.0 - 1.0 / l + 1.0 / (l * l)) / (r * r);
    (v, d1, d2)
}

fn cigar_derivs(eps: f64, delta: f64, r: f64) -> (f64, f64, f64) {
    let s = delta + r * r;
    let v = 0.5 * (eps.ln() - s.ln());
    (v, -r / s, -(delta - r * r) / (s * s))
}

fn sphere_derivs(beta: f64, k: f64, r: f64) -> (f64, f64, f64) {
    // With q = β²K/4 kept in log form, u = β² / (1 + q r²)² stays
    // representable in v for any β.
    let log_q = 2.0 * beta.ln() + k.ln() - 4f64.ln();
    if r == 0.0 {
        return (beta.ln(), 0.0, -2.0 * log_q.exp());
    }
    let v = beta.ln() - log_add_exp(0.0, log_q + 2.0 * r.ln());
    let inv_q = (-log_q).exp();
    let s = inv_q + r * r;
    (v, -2.0 * r / s, -2.0 * (inv_q - r * r) / (s * s))
}

impl RadialProfile {
    pub fn cusp(alpha: f64) -> Result<Self> {
        require(alpha >= 1.0 && alpha.is_finite(), || format!("cusp scale {alpha} < 1"))?;
        Ok(Self::Cusp { alpha })
    }

    pub fn cigar(eps: f64, delta: f64) -> Result<Self> {
        require(eps > 0.0 && delta > 0.0, || {
            format!("cigar needs eps > 0 and delta > 0, got ({eps:e}, {delta:e})")
        })?;
        Ok(Self::Cigar { eps, delta })
    }

    pub fn sphere(beta: f64, curvature: f64) -> Result<Self> {
        require(beta > 0.0 && curvature > 0.0, || {
            format!("sphere needs beta > 0 and K > 0, got ({beta:e}, {curvature:e})")
        })?;
        Ok(Self::Sphere { beta, curvature })
    }

    pub fn capped_cusp(r0: f64) -> Result<Self> {
        tangent_cigar(r0)?;
        Ok(Self::CappedCusp { r0 })
    }

    pub fn flat(v: f64) -> Self {
        Self::Flat { v }
    }

    pub fn tag(&self) -> ProfileTag {
        match self {
            Self::Cusp { alpha } => ProfileTag::Cusp { alpha: *alpha },
            Self::Poincare => ProfileTag::Poincare,
            Self::Cigar { eps, delta } => ProfileTag::Cigar { eps: *eps, delta: *delta },
            Self::Sphere { beta, curvature } => {
                ProfileTag::Sphere { beta: *beta, curvature: *curvature }
            }
            Self::CappedCusp { r0 } => ProfileTag::CappedCusp { r0: *r0 },
            Self::Flat { v } => ProfileTag::Flat { v: *v },
            Self::Sampled(s) => ProfileTag::Sampled { nodes: s.grid.len() },
        }
    }

    fn check_domain(&self, r: f64) -> Result<()> {
        require(r >= 0.0, || format!("negative radius {r:e}"))?;
        match self {
            Self::Cusp { .. } => require(r > 0.0 && r < 1.0, || {
                format!("cusp defined on (0, 1), got r = {r:e}")
            }),
            Self::Poincare | Self::CappedCusp { .. } => {
                require(r < 1.0, || format!("profile defined on [0, 1), got r = {r:e}"))
            }
            Self::Sampled(s) => require(r <= s.grid.r_out(), || {
                format!("r = {r:e} beyond sampled range {}", s.grid.r_out())
            }),
            _ => require(r.is_finite(), || format!("non-finite radius {r}")),
        }
    }

    /// `v(r) = ½ log u(r)`.
    pub fn v(&self, r: f64) -> Result<f64> {
        self.check_domain(r)?;
        Ok(match self {
            Self::Sampled(s) => s.grid.interpolate(&s.v, r),
            _ => self.closed_form(r).0,
        })
    }

    /// `u(r) = e^{2 v(r)}`; may overflow to infinity for very large `v`.
    pub fn u(&self, r: f64) -> Result<f64> {
        Ok((2.0 * self.v(r)?).exp())
    }

    /// Exact `(v, v', v'')` for closed-form variants.
    pub fn derivatives(&self, r: f64) -> Result<(f64, f64, f64)> {
        self.check_domain(r)?;
        if let Self::Sampled(_) = self {
            return Err(Error::domain("sampled profiles have no closed-form derivatives"));
        }
        Ok(self.closed_form(r))
    }

    fn closed_form(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            Self::Cusp { alpha } => cusp_derivs(alpha, r),
            Self::Poincare => {
                let w = 1.0 - r * r;
                (LN_2 - w.ln(), 2.0 * r / w, 2.0 * (1.0 + r * r) / (w * w))
            }
            Self::Cigar { eps, delta } => cigar_derivs(eps, delta, r),
            Self::Sphere { beta, curvature } => sphere_derivs(beta, curvature, r),
            Self::CappedCusp { r0 } => {
                if r <= r0 {
                    let (eps, delta) = tangent_cigar(r0).expect("validated at construction");
                    cigar_derivs(eps, delta, r)
                } else {
                    cusp_derivs(1.0, r)
                }
            }
            Self::Flat { v } => (v, 0.0, 0.0),
            Self::Sampled(_) => unreachable!("handled by callers"),
        }
    }

    /// `v` at log-radius `s = log r`, valid where `r = e^s` underflows.
    fn v_at_log_radius(&self, s: f64) -> Result<f64> {
        match *self {
            Self::Cusp { alpha } => Ok(alpha.ln() - s - (-s).ln()),
            Self::Cigar { eps, delta } => Ok(0.5 * (eps.ln() - log_add_exp(delta.ln(), 2.0 * s))),
            Self::CappedCusp { r0 } if s > r0.ln() => Ok(-s - (-s).ln()),
            Self::CappedCusp { r0 } => {
                let (eps, delta) = tangent_cigar(r0)?;
                Ok(0.5 * (eps.ln() - log_add_exp(delta.ln(), 2.0 * s)))
            }
            _ => self.v(s.exp()),
        }
    }

    /// Gauss curvature `K(r) = -e^{-2v} Δv`.
    pub fn gauss_curvature(&self, r: f64) -> Result<f64> {
        self.check_domain(r)?;
        match self {
            Self::Sampled(s) => {
                if s.grid.len() < 3 {
                    return Err(Error::InvalidGrid("curvature needs at least 3 nodes".into()));
                }
                Ok(s.grid.interpolate(&s.nodal_curvature(), r))
            }
            _ => {
                let (v, d1, d2) = self.closed_form(r);
                let lap = if r == 0.0 { 2.0 * d2 } else { d2 + d1 / r };
                Ok(-(-2.0 * v).exp() * lap)
            }
        }
    }
}

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `∫ |u_a - u_b| dx` over the annulus `r_lo < |x| < r_hi`.
///
/// Below `r = e^{-1}` the integral is taken in the variable `y = -1/log r`,
/// under which the cusp density `u r² ds` becomes `dy` and the origin maps to
/// the finite endpoint `y = 0`.
pub fn l1_distance(a: &RadialProfile, b: &RadialProfile, r_lo: f64, r_hi: f64) -> Result<f64> {
    require(r_lo >= 0.0 && r_lo < r_hi, || {
        format!("need 0 <= r_lo < r_hi, got ({r_lo:e}, {r_hi:e})")
    })?;
    let split = r_hi.min(HORIZON);
    let mut total = 0.0;
    let mut error = 0.0;

    if r_lo < split {
        let y_lo = if r_lo == 0.0 { 0.0 } else { -1.0 / r_lo.ln() };
        let y_hi = -1.0 / split.ln();
        let failed = std::cell::Cell::new(None);
        let integrand = |y: f64| {
            if y <= 0.0 {
                return 0.0;
            }
            let s = -1.0 / y;
            match (a.v_at_log_radius(s), b.v_at_log_radius(s)) {
                (Ok(va), Ok(vb)) => {
                    let hi = va.max(vb);
                    let lo = va.min(vb);
                    // r² |u_a - u_b| = e^{2s + 2 hi} (1 - e^{-2(hi - lo)})
                    let mag = (2.0 * s + 2.0 * hi).exp() * -(-2.0 * (hi - lo)).exp_m1();
                    mag / (y * y)
                }
                (Err(e), _) | (_, Err(e)) => {
                    failed.set(Some(e.to_string()));
                    0.0
                }
            }
        };
        let (val, err) = quadrature::integrate(integrand, y_lo, y_hi, L1_REL_TOL * 0.5, 0.0)?;
        if let Some(msg) = failed.take() {
            return Err(Error::Domain(msg));
        }
        total += val;
        error += err;
    }
    if split < r_hi {
        let lo = r_lo.max(split);
        let failed = std::cell::Cell::new(None);
        let integrand = |r: f64| match (a.v(r), b.v(r)) {
            (Ok(va), Ok(vb)) => {
                let hi = va.max(vb);
                let d = hi - va.min(vb);
                (2.0 * hi).exp() * -(-2.0 * d).exp_m1() * r
            }
            (Err(e), _) | (_, Err(e)) => {
                failed.set(Some(e.to_string()));
                0.0
            }
        };
        let (val, err) = quadrature::integrate(integrand, lo, r_hi, L1_REL_TOL * 0.5, 0.0)?;
        if let Some(msg) = failed.take() {
            return Err(Error::Domain(msg));
        }
        total += val;
        error += err;
    }
    if error > L1_REL_TOL * total.abs() && error > 0.0 {
        return Err(Error::Quadrature { value: 2.0 * PI * total, error_estimate: 2.0 * PI * error });
    }
    Ok(2.0 * PI * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn cusp_value_at_horizon() {
        let v = RadialProfile::cusp(1.0).unwrap().v(HORIZON).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn poincare_and_sphere_at_origin() {
        assert!((RadialProfile::Poincare.v(0.0).unwrap() - LN_2).abs() < 1e-15);
        let s = RadialProfile::sphere(3.5, 0.7).unwrap();
        assert!((s.v(0.0).unwrap() - 3.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let c = RadialProfile::cusp(1.0).unwrap();
        assert!(c.v(1.0).is_err());
        assert!(c.v(0.0).is_err());
        assert!(RadialProfile::Poincare.v(-0.1).is_err());
        assert!(RadialProfile::capped_cusp(HORIZON).is_err());
        assert!(RadialProfile::cusp(0.5).is_err());
    }

    #[test]
    fn constant_curvatures() {
        let cusp = RadialProfile::cusp(1.0).unwrap();
        let sphere = RadialProfile::sphere(2.0, 3.0).unwrap();
        for &r in &[1e-30, 1e-8, 0.01, 0.3, 0.9, 0.999] {
            assert!(rel(cusp.gauss_curvature(r).unwrap(), -1.0) < 1e-12, "cusp r={r}");
            assert!(rel(RadialProfile::Poincare.gauss_curvature(r).unwrap(), -1.0) < 1e-12);
            assert!(rel(sphere.gauss_curvature(r).unwrap(), 3.0) < 1e-12, "sphere r={r}");
        }
        let scaled = RadialProfile::cusp(2.0).unwrap();
        assert!(rel(scaled.gauss_curvature(0.2).unwrap(), -0.25) < 1e-12);
    }

    #[test]
    fn cigar_curvature_at_origin_matches_extrapolated_difference() {
        // Oracle: five-point central difference of log u = -log(1 + r²) in
        // Cartesian x at the origin, Δ = 2 ∂²/∂x², Richardson-extrapolated.
        let log_u = |x: f64| -(1.0 + x * x).ln();
        let second = |h: f64| (log_u(h) - 2.0 * log_u(0.0) + log_u(-h)) / (h * h);
        let (d_h, d_h2) = (second(1e-2), second(5e-3));
        let extrapolated = (4.0 * d_h2 - d_h) / 3.0;
        // K = -½ u⁻¹ Δ log u, with Δ = 2 ∂²_x at a radial origin.
        let oracle = -0.5 * 2.0 * extrapolated;
        let k = RadialProfile::cigar(1.0, 1.0).unwrap().gauss_curvature(0.0).unwrap();
        assert!((k - 2.0).abs() < 1e-12);
        assert!((k - oracle).abs() < 1e-8, "oracle {oracle}");
    }

    #[test]
    fn log_space_evaluation_never_overflows() {
        let c = RadialProfile::cusp(1.0).unwrap();
        let v = c.v(1e-300).unwrap();
        assert!(v.is_finite() && v > 600.0);
        let s = c.v_at_log_radius(-2000.0).unwrap();
        assert!(s.is_finite() && s > 1000.0);
        let cap = RadialProfile::capped_cusp((-40.0f64).exp()).unwrap();
        assert!(cap.v(0.0).unwrap().is_finite());
        assert!(RadialProfile::capped_cusp((-400.0f64).exp()).is_err(), "delta underflows");
    }

    #[test]
    fn capped_cusp_is_c1_at_glue() {
        let r0 = (-5.0f64).exp();
        let p = RadialProfile::capped_cusp(r0).unwrap();
        let (eps, delta) = tangent_cigar(r0).unwrap();
        let cig = cigar_derivs(eps, delta, r0);
        let cusp = cusp_derivs(1.0, r0);
        assert!((cig.0 - cusp.0).abs() < 1e-13);
        assert!(rel(cig.1, cusp.1) < 1e-12);
        assert!((p.v(r0).unwrap() - cusp.0).abs() < 1e-13);
        // u ≥ e² with equality at e^{-1}
        for i in 0..200 {
            let r = 0.999 * i as f64 / 200.0;
            assert!(p.v(r).unwrap() >= 1.0 - 1e-14);
        }
        assert!((p.v(HORIZON).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn l1_cusp_minus_constant() {
        let cusp = RadialProfile::cusp(1.0).unwrap();
        let flat = RadialProfile::flat(1.0);
        let d = l1_distance(&cusp, &flat, 0.0, HORIZON).unwrap();
        assert!(rel(d, PI) < 1e-8, "{d}");
        // general r: 2π/(-log r) - π/(log r)²
        let r = 0.1f64;
        let expect = 2.0 * PI / -r.ln() - PI / (r.ln() * r.ln());
        let alpha_v = cusp.v(r).unwrap();
        let d = l1_distance(&cusp, &RadialProfile::flat(alpha_v), 0.0, r).unwrap();
        assert!(rel(d, expect) < 1e-8, "{d} vs {expect}");
    }

    #[test]
    fn l1_identical_is_zero() {
        let p = RadialProfile::sphere(2.0, 1.0).unwrap();
        assert_eq!(l1_distance(&p, &p, 0.0, 0.9).unwrap(), 0.0);
        assert_eq!(l1_distance(&p, &p, 0.1, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn l1_capped_cusp_closed_form() {
        // ∫_{B_r0} h = 2π/L, ∫_{B_r0} cigar = π ε log L with L = -log r0.
        let cusp = RadialProfile::cusp(1.0).unwrap();
        let mut last = f64::INFINITY;
        for k in [2.0f64, 4.0, 8.0] {
            let r0 = (-k).exp();
            let cap = RadialProfile::capped_cusp(r0).unwrap();
            let d = l1_distance(&cap, &cusp, 0.0, 1.0 - 1e-6).unwrap();
            let eps = 1.0 / ((k - 1.0) * k);
            let expect = 2.0 * PI / k - PI * eps * k.ln();
            assert!(rel(d, expect) < 1e-7, "k={k}: {d} vs {expect}");
            assert!(d < last);
            last = d;
        }
        let _ = E;
    }
}
