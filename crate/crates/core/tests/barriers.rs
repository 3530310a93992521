use std::sync::Arc;

use cuspflow::barriers::{cigar_tangency, curvature_witness, k0_lower_bound, sphere_tangency, SphereTangency};
use cuspflow::solver::{capped_cusp_grid, state_from_values, CURVATURE_NOISE};
use cuspflow::{RadialProfile, SampledProfile};
use proptest::prelude::*;

const HORIZON: f64 = 0.367_879_441_171_442_33;

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn tangency_is_exact() {
    let alpha = 1.05;
    let cusp = RadialProfile::cusp(alpha).unwrap();
    for r0 in log_spaced(1e-8, HORIZON - 1e-8, 50) {
        let (dv, dd) = cigar_tangency(r0).unwrap().residuals();
        assert!(dv <= 1e-10 && dd <= 1e-10, "cigar at {r0:e}: {dv:e} {dd:e}");

        let sphere = SphereTangency::from_radius(alpha, r0).unwrap();
        let (vs, ds, _) = sphere.profile().derivatives(r0).unwrap();
        let (vc, dc, _) = cusp.derivatives(r0).unwrap();
        // u and u' relative mismatch, from v and v'.
        assert!((vs - vc).abs() <= 0.5e-10, "sphere value at {r0:e}: {vs} vs {vc}");
        // v' is measured on its natural scale 1/r; the cusp slope itself
        // vanishes as r0 -> e^-1.
        assert!((ds - dc).abs() * r0 <= 1e-10, "sphere slope at {r0:e}: {ds} vs {dc}");
    }
}

#[test]
fn barriers_touch_from_below_only_at_r0() {
    let alpha = 1.05;
    let radii = log_spaced(1e-12, 1.0 - 1e-6, 20_000);
    for r0 in log_spaced(1e-8, 0.3, 12) {
        let cigar = cigar_tangency(r0).unwrap().profile();
        let sphere = SphereTangency::from_radius(alpha, r0).unwrap().profile();
        for &r in &radii {
            let h = RadialProfile::cusp(1.0).unwrap().v(r).unwrap();
            let gap_c = (2.0 * (cigar.v(r).unwrap() - h)).exp_m1();
            let gap_s = (2.0 * (sphere.v(r).unwrap() - h - alpha.ln())).exp_m1();
            assert!(gap_c <= 1e-10 && gap_s <= 1e-10, "r0 = {r0:e}, r = {r:e}");
            if (r / r0).ln().abs() > 1e-2 {
                assert!(gap_c < -1e-10 && gap_s < -1e-10, "equality away from r0 = {r0:e} at {r:e}");
            }
        }
    }
}

#[test]
fn sphere_family_is_monotone() {
    let fam: Vec<SphereTangency> =
        log_spaced(1e-10, 0.36, 200).iter().map(|&r0| SphereTangency::from_radius(1.05, r0).unwrap()).collect();
    for w in fam.windows(2) {
        assert!(w[1].beta < w[0].beta && w[1].k0 < w[0].k0);
    }
}

proptest! {
    #[test]
    fn inverse_and_lower_bound(alpha in 1.0..2.0f64, l in 1.001..20.0f64) {
        let forward = SphereTangency::from_radius(alpha, (-l).exp()).unwrap();
        let back = sphere_tangency(alpha, forward.beta).unwrap();
        prop_assert!(rel(back.r0, forward.r0) <= 1e-10);
        prop_assert!(rel(back.k0, forward.k0) <= 1e-8);
        prop_assert!(back.k0 >= k0_lower_bound(alpha, forward.beta) - 1e-12);
    }
}

#[test]
fn witness_on_capped_cusp_is_sound() {
    let (alpha, mu) = (1.05, 0.12);
    for k in [5.0f64, 10.0, 20.0] {
        let r0 = (-k).exp();
        let grid = Arc::new(capped_cusp_grid(2048, r0, 0.9).unwrap());
        let field = SampledProfile::from_profile(&RadialProfile::capped_cusp(r0).unwrap(), grid.clone()).unwrap();
        let v0 = field.values()[0];
        let t = 1.01 * mu / v0;
        let w = curvature_witness(&field, t, alpha, mu).unwrap();
        let state = state_from_values(grid, field.values().to_vec(), t).unwrap();
        let max_k = state.resolved_curvature(CURVATURE_NOISE).into_iter().flatten().fold(f64::NEG_INFINITY, f64::max);
        assert!(w.k0 <= max_k * (1.0 + 1e-3), "e^-{k}: witness {} > grid max {max_k}", w.k0);
        assert!(w.log_beta >= v0, "log beta {} < v(0) {v0}", w.log_beta);
        assert!(w.r_touch < w.r0);
    }
}
