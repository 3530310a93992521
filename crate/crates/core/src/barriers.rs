//! Explicit barrier families for the contracting cusp.
//!
//! * cigars `ε/(δ + r²)` tangent to the unit cusp `h = 1/(r log r)²` at `r0`,
//!   their capped-cusp envelopes and their exact Ricci-flow evolution;
//! * the origin lower bound obtained by optimising the evolving cigars;
//! * constant-curvature spheres tangent to `α² h` and the touching-sphere
//!   curvature witness for sampled fields lying under `α² h`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{log_add_exp, tangent_cigar, RadialProfile, SampledProfile, HORIZON};

/// Band used to declare that a barrier touches a sampled field from above:
/// `min (w - u) <= TOUCH_BAND · u`.
pub const TOUCH_BAND: f64 = 1e-6;

/// Threshold for reporting a violation of one-sided cigar touching.
pub const TOUCH_VIOLATION_TOL: f64 = 1e-10;

fn cusp_v(r: f64) -> f64 {
    let l = -r.ln();
    l - l.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CigarTangency {
    pub r0: f64,
    pub eps: f64,
    pub delta: f64,
}

impl CigarTangency {
    pub fn profile(&self) -> RadialProfile {
        RadialProfile::Cigar { eps: self.eps, delta: self.delta }
    }

    /// Relative mismatch of value and first derivative against the cusp at
    /// the tangency radius.
    pub fn residuals(&self) -> (f64, f64) {
        let r = self.r0;
        let l = -r.ln();
        let s = self.delta + r * r;
        let h = 1.0 / (r * r * l * l);
        let cigar = self.eps / s;
        let dh = -2.0 * (l - 1.0) / (r * r * r * l * l * l);
        let dcigar = -2.0 * self.eps * r / (s * s);
        ((cigar - h).abs() / h, (dcigar - dh).abs() / dh.abs())
    }
}

/// Cigar tangent to the unit cusp at `r0 ∈ (0, e^{-1})`.
pub fn cigar_tangency(r0: f64) -> Result<CigarTangency> {
    let (eps, delta) = tangent_cigar(r0)?;
    Ok(CigarTangency { r0, eps, delta })
}

/// `F(r) = r² (log r)² - L₀ (r₀² + (L₀ - 1) r²)`, `L₀ = -log r₀`; the cigar lies
/// under the cusp exactly where `F <= 0`.
pub fn touch_polynomial(r: f64, r0: f64) -> f64 {
    let l0 = -r0.ln();
    let lr = r.ln();
    r * r * lr * lr - l0 * (r0 * r0 + (l0 - 1.0) * r * r)
}

/// `F'(r) = 2r (L - L₀)(L + L₀ - 1)` with `L = -log r`.
pub fn touch_polynomial_derivative(r: f64, r0: f64) -> f64 {
    let l0 = -r0.ln();
    let l = -r.ln();
    2.0 * r * (l - l0) * (l + l0 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouchReport {
    /// `max (u_cigar - h) / h` over the samples; non-positive up to rounding.
    pub max_violation: f64,
    pub at_radius: f64,
    pub samples: usize,
}

/// Samples `(0, 1)` log-uniformly and checks that the tangent cigar stays
/// under the cusp, together with the sign pattern of `F'`: increasing on
/// `(0, r0)`, decreasing on `(r0, 1)`.
pub fn verify_cigar_touch(r0: f64, n_samples: usize) -> Result<TouchReport> {
    if n_samples < 100 {
        return Err(Error::Precondition(format!("need at least 100 samples, got {n_samples}")));
    }
    let tan = cigar_tangency(r0)?;
    let s_lo = (r0.min(1e-3) * 1e-6).ln();
    let s_hi = (-1e-9f64).ln_1p();
    let mut report = TouchReport { max_violation: f64::NEG_INFINITY, at_radius: f64::NAN, samples: n_samples };
    for i in 0..n_samples {
        let s = s_lo + (s_hi - s_lo) * (i as f64 + 0.5) / n_samples as f64;
        let r = s.exp();
        let v_cigar = 0.5 * (tan.eps.ln() - log_add_exp(tan.delta.ln(), 2.0 * s));
        let excess = (2.0 * (v_cigar - cusp_v(r))).exp_m1();
        if excess > report.max_violation {
            report.max_violation = excess;
            report.at_radius = r;
        }
        let slope = touch_polynomial_derivative(r, r0);
        let expected_positive = r < r0;
        if slope != 0.0 && (slope > 0.0) != expected_positive {
            return Err(Error::TouchViolation { r, excess: slope });
        }
    }
    if report.max_violation > TOUCH_VIOLATION_TOL {
        return Err(Error::TouchViolation { r: report.at_radius, excess: report.max_violation });
    }
    Ok(report)
}

/// The capped cusp: tangent cigar on `[0, r0]`, unit cusp beyond.
pub fn capped_cusp_profile(r0: f64) -> Result<RadialProfile> {
    RadialProfile::capped_cusp(r0)
}

/// `v` of the exact evolving cigar `ε / (δ e^{4t/ε} + r²)` started from the
/// cigar tangent at `r0`.
pub fn cigar_flow(r0: f64, r: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !(r >= 0.0) {
        return Err(Error::domain(format!("cigar flow needs r, t >= 0, got r = {r:e}, t = {t:e}")));
    }
    let tan = cigar_tangency(r0)?;
    let log_den = if r == 0.0 {
        tan.delta.ln() + 4.0 * t / tan.eps
    } else {
        log_add_exp(tan.delta.ln() + 4.0 * t / tan.eps, 2.0 * r.ln())
    };
    Ok(0.5 * (tan.eps.ln() - log_den))
}

/// `-log ũ_{r0}(0, t) = 2 log r0 + log(-log r0) + 4t (-log r0)(-log r0 - 1)`.
pub fn neg_log_origin_cigar(r0: f64, t: f64) -> f64 {
    let l = -r0.ln();
    -2.0 * l + l.ln() + 4.0 * t * l * (l - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginBound {
    pub v_bound: f64,
    pub r0_opt: f64,
}

/// Best cigar lower bound for the conformal factor at the origin:
/// `u(0, t) >= 4t e^{1/(4t) + 1}`, attained by the cigar tangent at
/// `r0 = e^{-1/(4t)}`.
pub fn origin_lower_bound(t: f64) -> Result<OriginBound> {
    if !(t > 0.0 && t < 0.25) {
        return Err(Error::domain(format!("origin bound needs t in (0, 1/4), got {t}")));
    }
    Ok(OriginBound {
        v_bound: 1.0 / (8.0 * t) + 0.5 * (1.0 + (4.0 * t).ln()),
        r0_opt: (-1.0 / (4.0 * t)).exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereTangency {
    pub alpha: f64,
    pub beta: f64,
    pub k0: f64,
    pub r0: f64,
}

impl SphereTangency {
    /// Forward map: the sphere tangent to `α² h` at `r0`.
    pub fn from_radius(alpha: f64, r0: f64) -> Result<Self> {
        if !(alpha >= 1.0) {
            return Err(Error::domain(format!("sphere family needs alpha >= 1, got {alpha}")));
        }
        if !(r0 > 0.0 && r0 < HORIZON) {
            return Err(Error::domain(format!("tangency radius {r0:e} outside (0, e^-1)")));
        }
        let l = -r0.ln();
        Ok(Self {
            alpha,
            beta: 2.0 * alpha / (r0 * (l + 1.0)),
            k0: (l - 1.0) * (l + 1.0) / (alpha * alpha),
            r0,
        })
    }

    pub fn profile(&self) -> RadialProfile {
        RadialProfile::Sphere { beta: self.beta, curvature: self.k0 }
    }

    /// `v` of the sphere at log-radius `s`.
    fn v_at_log_radius(&self, s: f64) -> f64 {
        let log_q = 2.0 * self.beta.ln() + self.k0.ln() - 4f64.ln();
        self.beta.ln() - log_add_exp(0.0, log_q + 2.0 * s)
    }
}

/// Excess `x = -log r0 - 1` solving `x + 1 - log(x + 2) = log(β / 2α)`.
fn sphere_excess(alpha: f64, beta: f64) -> Result<f64> {
    let target = (beta / (2.0 * alpha)).ln();
    let g = |x: f64| x + 1.0 - (x + 2.0).ln() - target;
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::SearchFailed(format!("no bracket for beta = {beta:e}")));
        }
    }
    for _ in 0..4000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::SearchFailed(format!("bisection did not terminate for beta = {beta:e}")))
}

/// The sphere `β² / (1 + β² K₀ r²/4)²` lying under `α² h` and touching it at a
/// single radius `r0(β)`, where `β = 2α / (r0 (L + 1))` and
/// `K₀ = (L - 1)(L + 1) / α²` with `L = -log r0`.
///
/// The decreasing map `r0 ↦ β` is inverted by bisection in `x = L - 1`,
/// which keeps `K₀ = x (x + 2) / α²` accurate as `β ↓ α e`.
pub fn sphere_tangency(alpha: f64, beta: f64) -> Result<SphereTangency> {
    if !(alpha >= 1.0) {
        return Err(Error::domain(format!("sphere family needs alpha >= 1, got {alpha}")));
    }
    if !(beta > alpha * std::f64::consts::E) {
        return Err(Error::domain(format!(
            "no tangent sphere for beta = {beta:e} <= alpha e = {:e}",
            alpha * std::f64::consts::E
        )));
    }
    let x = sphere_excess(alpha, beta)?;
    Ok(SphereTangency {
        alpha,
        beta,
        k0: x * (x + 2.0) / (alpha * alpha),
        r0: (-(x + 1.0)).exp(),
    })
}

/// `((log(β/2α))² - 1) / α²`, the elementary lower bound for `K₀(β)` that
/// follows from `r0 <= 2α/β`.
pub fn k0_lower_bound(alpha: f64, beta: f64) -> f64 {
    let l = (beta / (2.0 * alpha)).ln();
    (l * l - 1.0) / (alpha * alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Curvature of the touching sphere; a lower bound for `max K`.
    pub k0: f64,
    pub beta: f64,
    pub log_beta: f64,
    /// Tangency radius of the sphere with `α² h`.
    pub r0: f64,
    /// Node where the barrier touches the field.
    pub r_touch: f64,
    pub touch_index: usize,
    /// `min (v_w - v)` at the returned `β`.
    pub gap: f64,
}

struct Barrier<'a> {
    field: &'a SampledProfile,
    log_alpha: f64,
}

impl Barrier<'_> {
    /// `min_i (v_w - v)_i` and its node for `β = e^b`.
    fn gap(&self, b: f64) -> Result<(f64, usize, SphereTangency)> {
        let sphere = sphere_tangency(self.log_alpha.exp(), b.exp())?;
        let nodes = self.field.grid().nodes();
        let mut best = (f64::INFINITY, 0usize);
        for (i, (&r, &v)) in nodes.iter().zip(self.field.values()).enumerate() {
            let vw = if r < sphere.r0 {
                if r == 0.0 {
                    b
                } else {
                    sphere.v_at_log_radius(r.ln())
                }
            } else {
                self.log_alpha + cusp_v(r)
            };
            let d = vw - v;
            if d < best.0 {
                best = (d, i);
            }
        }
        Ok((best.0, best.1, sphere))
    }
}

/// Touching-sphere lower bound for the maximum curvature of a sampled field
/// lying strictly under `α² h`: lowers `β` from above until the barrier
/// `w_β` (sphere inside `r0(β)`, `α² h` outside) first touches the field at
/// some node `r1 < r0(β)`, and returns the sphere curvature `K₀(β)`.
pub fn curvature_witness(field: &SampledProfile, t: f64, alpha: f64, mu: f64) -> Result<Witness> {
    let nodes = field.grid().nodes();
    let v = field.values();
    let log_alpha = alpha.ln();
    if !(alpha > 1.0) {
        return Err(Error::Precondition(format!("alpha must exceed 1, got {alpha}")));
    }
    for (i, (&r, &vi)) in nodes.iter().zip(v).enumerate().skip(1) {
        if !(vi < log_alpha + cusp_v(r)) {
            return Err(Error::Precondition(format!(
                "field exceeds alpha^2 h at node {i} (r = {r:e})"
            )));
        }
    }
    if !(t > 0.0 && v[0] >= mu / t) {
        return Err(Error::Precondition(format!(
            "v(0) = {} below mu/t = {}",
            v[0],
            mu / t
        )));
    }
    let barrier = Barrier { field, log_alpha };
    let band = 0.5 * TOUCH_BAND.ln_1p();
    let b_min = log_alpha + 1.0;

    let mut b_hi = v[0].max(b_min) + 0.5;
    let mut tries = 0;
    while barrier.gap(b_hi)?.0 <= 0.0 {
        b_hi += 1.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::SearchFailed("barrier never clears the field".into()));
        }
    }
    // Walk down until the barrier stops dominating.
    let step = 0.01;
    let mut b_lo = b_hi;
    loop {
        let next = b_lo - step;
        if next <= b_min {
            let b_edge = b_min + 1e-12 * b_min.abs().max(1.0);
            if barrier.gap(b_edge)?.0 > 0.0 {
                return Err(Error::SearchFailed(
                    "no touching beta above alpha e".into(),
                ));
            }
            b_hi = b_lo;
            b_lo = b_edge;
            break;
        }
        if barrier.gap(next)?.0 <= 0.0 {
            b_hi = b_lo;
            b_lo = next;
            break;
        }
        b_lo = next;
    }
    // Invariant: gap(b_hi) > 0 >= gap(b_lo).
    let mut found = barrier.gap(b_hi)?;
    for _ in 0..200 {
        if found.0 <= band {
            break;
        }
        let mid = 0.5 * (b_lo + b_hi);
        if mid <= b_lo || mid >= b_hi {
            break;
        }
        let g = barrier.gap(mid)?;
        if g.0 > 0.0 {
            b_hi = mid;
            found = g;
        } else {
            b_lo = mid;
        }
    }
    let (gap, idx, sphere) = found;
    if gap > band {
        return Err(Error::SearchFailed(format!("touching band not reached (gap {gap:e})")));
    }
    let r_touch = nodes[idx];
    if idx + 1 == nodes.len() {
        return Err(Error::SearchFailed("barrier touches at the outer boundary node".into()));
    }
    if r_touch >= sphere.r0 {
        return Err(Error::SearchFailed(format!(
            "touching at r = {r_touch:e} not inside r0 = {:e}",
            sphere.r0
        )));
    }
    Ok(Witness {
        k0: sphere.k0,
        beta: sphere.beta,
        log_beta: b_hi,
        r0: sphere.r0,
        r_touch,
        touch_index: idx,
        gap,
    })
}
