use std::sync::Arc;

use cuspflow::harnack::{harnack_f, liyau_conclusion_check, static_cigar_part, HarnackForm};
use cuspflow::harness::config::geometric_times;
use cuspflow::solver::{capped_cusp_grid, run, state_from_values, BoundaryRule, FlowState, SolverConfig};
use cuspflow::{RadialGrid, RadialProfile};

fn max_form_gap(s: &FlowState) -> f64 {
    let a = harnack_f(s, HarnackForm::Curvature).unwrap();
    let b = harnack_f(s, HarnackForm::Laplacian).unwrap();
    a.values
        .iter()
        .zip(&b.values)
        .filter_map(|(x, y)| Some((x.as_ref()? - y.as_ref()?).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn forms_agree_along_a_capped_cusp_run() {
    let r0 = (-10.0f64).exp();
    let grid = Arc::new(capped_cusp_grid(2048, r0, 0.9).unwrap());
    let profile = RadialProfile::capped_cusp(r0).unwrap();
    let times = [0.02, 0.05, 0.1];
    let traj = run(&profile, grid, &BoundaryRule::ScaledCusp, &SolverConfig::default(), 0.1, &times).unwrap();
    for s in &traj.samples {
        let gap = max_form_gap(s);
        assert!(gap <= 1e-3, "t = {}: forms differ by {gap:e}", s.t());
    }
}

#[test]
fn form_gap_shrinks_under_refinement() {
    // The homothetic hyperbolic disc at t = 0.5, where v >= 1 on the region.
    let t = 0.5;
    let gaps: Vec<f64> = [513, 1025, 2049]
        .iter()
        .map(|&n| {
            let grid = Arc::new(RadialGrid::uniform(n, 0.9).unwrap());
            let v = grid
                .nodes()
                .iter()
                .map(|&r| 0.5 * (2.0 * t as f64).ln_1p() + RadialProfile::Poincare.v(r).unwrap())
                .collect();
            max_form_gap(&state_from_values(grid, v, t).unwrap())
        })
        .collect();
    for w in gaps.windows(2) {
        assert!(w[1] <= 0.55 * w[0], "{gaps:?}");
    }
}

#[test]
fn cigar_part_increases_on_the_cap() {
    for k in [2.0f64, 5.0, 10.0, 20.0, 40.0] {
        let r0 = (-k).exp();
        let mut last = 0.0;
        for i in 1..=1000 {
            let r = r0 * i as f64 / 1000.0;
            let f = static_cigar_part(r0, r).unwrap();
            assert!(f > last, "r0 = e^-{k}: not increasing at r = {r:e}");
            last = f;
        }
    }
}

#[test]
fn positive_curvature_realises_the_liyau_sup() {
    let r0 = (-10.0f64).exp();
    let grid = Arc::new(capped_cusp_grid(1024, r0, 0.9).unwrap());
    let times = geometric_times(0.04, 0.06, 8, &[]);
    let profile = RadialProfile::capped_cusp(r0).unwrap();
    let traj = run(&profile, grid, &BoundaryRule::ScaledCusp, &SolverConfig::default(), 0.06, &times).unwrap();
    // The cap keeps K > 0 at the origin, so every window's sup is positive.
    assert!(traj.samples.iter().all(|s| s.curvature()[0] > 0.0));
    let report = liyau_conclusion_check(&traj.samples, 0.25).unwrap();
    assert!(!report.windows.is_empty());
    for w in &report.windows {
        assert!(w.sup > 0.0 && w.sup.is_finite(), "{w:?}");
        assert!(w.hypothesis_holds);
    }
}
