use std::sync::Arc;

use cuspflow::{RadialGrid, RadialProfile, SampledProfile};
use proptest::prelude::*;

/// `-e^{-2v}(v'' + v'/r)` from Richardson-extrapolated central differences of
/// `v` alone.
fn fd_curvature(p: &RadialProfile, r: f64, h: f64) -> f64 {
    let v = |x: f64| p.v(x).unwrap();
    let diffs = |h: f64| {
        let (a, b, c) = (v(r - h), v(r), v(r + h));
        ((c - a) / (2.0 * h), (c - 2.0 * b + a) / (h * h))
    };
    let (d1h, d2h) = diffs(h);
    let (d1q, d2q) = diffs(0.5 * h);
    let d1 = (4.0 * d1q - d1h) / 3.0;
    let d2 = (4.0 * d2q - d2h) / 3.0;
    -(-2.0 * v(r)).exp() * (d2 + d1 / r)
}

fn assert_curvature(p: &RadialProfile, r: f64, scale: f64) -> Result<(), TestCaseError> {
    let exact = p.gauss_curvature(r).unwrap();
    let fd = fd_curvature(p, r, 5e-3 * scale);
    prop_assert!(
        (fd - exact).abs() <= 1e-6 * exact.abs().max(1.0),
        "{p:?} at r = {r:e}: analytic {exact:e}, difference quotient {fd:e}"
    );
    Ok(())
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cusp_curvature(alpha in 1.0..2.0f64, r in log_uniform(1e-8, 0.9)) {
        let p = RadialProfile::cusp(alpha).unwrap();
        assert_curvature(&p, r, r.min(1.0 - r))?;
    }

    #[test]
    fn poincare_curvature(r in 0.01..0.95f64) {
        assert_curvature(&RadialProfile::Poincare, r, r.min(1.0 - r))?;
    }

    #[test]
    fn cigar_curvature(eps in 0.01..10.0f64, delta in log_uniform(1e-8, 1.0), x in log_uniform(0.05, 10.0)) {
        let p = RadialProfile::cigar(eps, delta).unwrap();
        let r = x * delta.sqrt();
        assert_curvature(&p, r, r.min(delta.sqrt()))?;
    }

    #[test]
    fn sphere_curvature(beta in 0.5..20.0f64, k in 0.1..10.0f64, x in log_uniform(0.05, 3.0)) {
        let p = RadialProfile::sphere(beta, k).unwrap();
        let scale = 2.0 / (beta * k.sqrt());
        let r = x * scale;
        assert_curvature(&p, r, r.min(scale))?;
    }

    #[test]
    fn capped_cusp_curvature(r0 in log_uniform(1e-8, 0.3), r in log_uniform(1e-10, 0.9)) {
        // The glue is only C^1, so stay clear of it.
        prop_assume!((r / r0).ln().abs() > 0.02);
        let p = RadialProfile::capped_cusp(r0).unwrap();
        let l = -r0.ln();
        let core = r0 / (l - 1.0).sqrt();
        // Well inside the core v is flat below its ulp.
        prop_assume!(r >= 0.05 * core);
        // h <= r / 200 keeps the stencil on one side of the glue.
        let scale = if r < r0 { r.min(core) } else { r.min(1.0 - r) };
        assert_curvature(&p, r, scale)?;
    }

    #[test]
    fn flat_curvature(v in -50.0..50.0f64, r in 0.01..10.0f64) {
        prop_assert_eq!(RadialProfile::flat(v).gauss_curvature(r).unwrap(), 0.0);
    }

    #[test]
    fn tangent_cigars_decrease(r0 in log_uniform(1e-12, 0.36), x in log_uniform(1e-3, 1e3), step in 1e-3..1.0f64) {
        let tangency = cuspflow::barriers::cigar_tangency(r0).unwrap();
        let cigar = tangency.profile();
        let a = x * tangency.delta.sqrt();
        let b = a * (1.0 + step);
        prop_assert!(cigar.u(b).unwrap() < cigar.u(a).unwrap());
        prop_assert!(cigar.derivatives(a).unwrap().1 < 0.0);
    }

    #[test]
    fn log_space_is_finite(r in log_uniform(1e-300, 0.999), r0 in log_uniform(1e-150, 0.3)) {
        let l0 = -r0.ln();
        let profiles = [
            RadialProfile::cusp(1.0).unwrap(),
            RadialProfile::capped_cusp(r0).unwrap(),
            RadialProfile::cigar(1.0 / (l0 * (l0 - 1.0)), 1e-300).unwrap(),
            RadialProfile::sphere(1e300, 1.0).unwrap(),
        ];
        for p in &profiles {
            let v = p.v(r).unwrap();
            prop_assert!(v.is_finite() && v.abs() <= 1e3, "{p:?} at {r:e}: {v}");
        }
    }

    /// Linear interpolation in `v` reproduces the closed form at nodes
    /// exactly and between nodes up to the interpolation bound
    /// `θ(1-θ) h² max|v''| / 2`.
    #[test]
    fn sampled_matches_closed_form(which in 0usize..4, node in 0usize..2047, theta in 0.0..1.0f64) {
        let (profile, grid) = match which {
            0 => (RadialProfile::Poincare, RadialGrid::uniform(2048, 0.9).unwrap()),
            1 => (RadialProfile::sphere(2.0, 1.0).unwrap(), RadialGrid::uniform(2048, 0.9).unwrap()),
            2 => (RadialProfile::cigar(0.5, (-4.0f64).exp()).unwrap(), RadialGrid::uniform(2048, 0.9).unwrap()),
            _ => (RadialProfile::capped_cusp((-20.0f64).exp()).unwrap(), RadialGrid::sinh(2048, (-20.0f64).exp(), 0.9).unwrap()),
        };
        let grid = Arc::new(grid);
        let sampled = RadialProfile::Sampled(SampledProfile::from_profile(&profile, grid.clone()).unwrap());
        let nodes = grid.nodes();
        prop_assert!((sampled.v(nodes[node]).unwrap() - profile.v(nodes[node]).unwrap()).abs() <= 1e-14);
        let (a, b) = (nodes[node], nodes[node + 1]);
        let r = a + theta * (b - a);
        let curv = [a, r, b].iter().map(|&x| profile.derivatives(x).unwrap().2.abs()).fold(0.0, f64::max);
        let bound = 0.5 * theta * (1.0 - theta) * (b - a).powi(2) * curv;
        let err = (sampled.v(r).unwrap() - profile.v(r).unwrap()).abs();
        prop_assert!(err <= 1.01 * bound + 1e-13, "r = {r:e}: {err:e} > {bound:e}");
    }
}

#[test]
fn caps_beyond_the_representable_core_are_rejected() {
    // delta = r0^2 / (log(1/r0) - 1) underflows.
    assert!(RadialProfile::capped_cusp(1e-200).is_err());
}

#[test]
fn closed_form_reference_values() {
    let e = std::f64::consts::E;
    assert!((RadialProfile::cusp(1.0).unwrap().v(1.0 / e).unwrap() - 1.0).abs() < 1e-15);
    assert!((RadialProfile::Poincare.v(0.0).unwrap() - 2.0f64.ln()).abs() < 1e-15);
    assert!((RadialProfile::sphere(3.0, 0.7).unwrap().v(0.0).unwrap() - 3.0f64.ln()).abs() < 1e-15);
    for r in [1e-6, 0.01, 0.3, 0.8] {
        assert!((RadialProfile::cusp(1.0).unwrap().gauss_curvature(r).unwrap() + 1.0).abs() < 1e-12);
        assert!((RadialProfile::sphere(3.0, 0.7).unwrap().gauss_curvature(r).unwrap() - 0.7).abs() < 1e-12);
    }
}
