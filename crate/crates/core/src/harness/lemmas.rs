//! Closed-form checks of the barrier constructions; no PDE solves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{Assertion, RunReport};
use crate::barriers::{
    cigar_flow, cigar_tangency, k0_lower_bound, origin_lower_bound, sphere_tangency,
    verify_cigar_touch, SphereTangency, TOUCH_VIOLATION_TOL,
};
use crate::error::Result;
use crate::harnack::{gradient_bound_static, static_cusp_part, static_cusp_part_log};
use crate::metrics::{RadialProfile, HORIZON};

/// Maximises a unimodal function on `[a, b]` by golden-section search.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn cusp_v(r: f64) -> f64 {
    let l = -r.ln();
    l - l.ln()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

/// Tangent cigars stay under the cusp.
fn cigar_touching(report: &mut RunReport, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut radii = vec![(-2.0f64).exp()];
    radii.extend((0..20).map(|_| log_uniform(rng, 1e-12, HORIZON * 0.99)));
    let mut worst: f64 = f64::NEG_INFINITY;
    for &r0 in &radii {
        worst = worst.max(verify_cigar_touch(r0, 10_000)?.max_violation);
    }
    report.assertions.push(Assertion::at_most(
        "cigar_touching",
        worst,
        TOUCH_VIOLATION_TOL,
        format!("max (u_cigar - h)/h over {} caps", radii.len()),
    ));
    Ok(())
}

/// `u_{r0'} >= u_{r0}` pointwise for `r0' < r0`.
fn capped_cusp_monotone(report: &mut RunReport, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let a = log_uniform(rng, 1e-12, HORIZON * 0.99);
        let b = log_uniform(rng, 1e-12, HORIZON * 0.99);
        let (small, large) = (a.min(b), a.max(b));
        let p_small = RadialProfile::capped_cusp(small)?;
        let p_large = RadialProfile::capped_cusp(large)?;
        for _ in 0..50 {
            let r = rng.gen_range(0.0..1.0 - 1e-6);
            worst = worst.max(p_large.v(r)? - p_small.v(r)?);
        }
    }
    report.assertions.push(Assertion::at_most(
        "capped_cusp_monotone",
        worst,
        1e-12,
        "max (v_{r0} - v_{r0'}) for r0' < r0",
    ));
    let min_v = [(-2.0f64).exp(), (-8.0f64).exp()]
        .iter()
        .map(|&r0| RadialProfile::capped_cusp(r0).and_then(|p| p.v(HORIZON)))
        .collect::<Result<Vec<_>>>()?;
    let err = min_v.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    report.assertions.push(Assertion::at_most("capped_cusp_floor", err, 1e-14, "|v(e^-1) - 1|"));
    Ok(())
}

/// `sup_{r0} u_cigar(r0)(r) = h(r)`, attained at `r0 = r`.
fn envelope(report: &mut RunReport, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut radii = vec![(-3.0f64).exp()];
    radii.extend((0..10).map(|_| log_uniform(rng, 1e-10, HORIZON * 0.9)));
    let (mut worst_value, mut worst_arg) = (0.0f64, 0.0f64);
    for &r in &radii {
        let v_cigar = |s: f64| -> f64 {
            let tan = cigar_tangency(s.exp()).expect("inside the family");
            tan.profile().v(r).expect("cigar defined everywhere")
        };
        let s_best = golden_max(v_cigar, r.ln() - 10.0, HORIZON.ln() - 1e-9);
        let rel = (2.0 * (v_cigar(s_best) - cusp_v(r))).exp_m1().abs();
        worst_value = worst_value.max(rel);
        worst_arg = worst_arg.max((s_best.exp() / r - 1.0).abs());
    }
    report.assertions.push(Assertion::at_most(
        "envelope_identity",
        worst_value,
        1e-8,
        "max |sup_{r0} u_cigar(r) / h(r) - 1|",
    ));
    report.assertions.push(Assertion::at_most(
        "envelope_argmax",
        worst_arg,
        1e-6,
        "max |argmax r0 / r - 1|",
    ));
    Ok(())
}

/// Static gradient bound on capped cusps and its cusp-part limit.
fn static_gradient(report: &mut RunReport) -> Result<()> {
    let caps = [5.0, 10.0, 20.0, 40.0];
    let mut sups = Vec::new();
    for &l in &caps {
        sups.push(gradient_bound_static((-l as f64).exp(), 20_000)?.sup);
    }
    let cusp_only = {
        let f = |s: f64| static_cusp_part(s.exp()).expect("inside (0, e^-1)");
        let s = golden_max(f, -60.0, -1.5);
        f(s)
    };
    let sup = sups.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inf = sups.iter().copied().fold(f64::INFINITY, f64::min);
    report.metrics.insert("static_gradient_sup".into(), sup);
    report.metrics.insert("static_gradient_cusp_max".into(), cusp_only);
    report.assertions.push(Assertion::at_most(
        "static_gradient_uniform",
        sup,
        2.0 * cusp_only,
        format!("sup over caps e^-{caps:?}; bound 2 x cusp-curve max"),
    ));
    report.assertions.push(Assertion::at_most(
        "static_gradient_drift",
        sup / inf - 1.0,
        0.05,
        "relative spread of the sup across caps",
    ));
    let at_1e8 = static_cusp_part(1e-8)?;
    report.metrics.insert("cusp_part_at_1e-8".into(), at_1e8);
    report.metrics.insert("cusp_part_at_log_1e8".into(), static_cusp_part_log(1e8));
    report.assertions.push(Assertion::at_most(
        "cusp_part_limit_at_1e-8",
        (at_1e8 - 1.0).abs(),
        1e-4,
        "|(log r + 1)^2 / (log|r log r|)^2 - 1| at r = 1e-8",
    ));
    Ok(())
}

/// Sphere family: tangency, monotonicity, asymptotics, lower bound.
fn sphere_family(report: &mut RunReport, rng: &mut ChaCha8Rng, alpha: f64) -> Result<()> {
    let mut radii: Vec<f64> = (0..50).map(|_| log_uniform(rng, 1e-8, HORIZON - 1e-8)).collect();
    radii.sort_by(f64::total_cmp);
    let cusp = RadialProfile::cusp(alpha)?;
    let mut residual = 0.0f64;
    let mut above = f64::NEG_INFINITY;
    let mut family = Vec::new();
    for &r0 in &radii {
        let sphere = SphereTangency::from_radius(alpha, r0)?;
        let (v, d1, _) = sphere.profile().derivatives(r0)?;
        let (vc, dc, _) = cusp.derivatives(r0)?;
        residual = residual.max((2.0 * (v - vc)).exp_m1().abs()).max(((d1 - dc) / dc).abs());
        let cig = cigar_tangency(r0)?;
        let (a, b) = cig.residuals();
        residual = residual.max(a).max(b);
        for k in 1..200 {
            let r = (k as f64 / 200.0).powi(4);
            above = above.max((2.0 * (sphere.profile().v(r)? - cusp.v(r)?)).exp_m1());
        }
        family.push(sphere);
    }
    report.assertions.push(Assertion::at_most(
        "tangency_residuals",
        residual,
        1e-10,
        "cigar and sphere value/derivative mismatch at r0",
    ));
    report.assertions.push(Assertion::at_most(
        "sphere_below_scaled_cusp",
        above,
        TOUCH_VIOLATION_TOL,
        "max (u_sphere / (alpha^2 h) - 1)",
    ));
    // Radii ascending: beta and K0 must both descend.
    let monotone = family.windows(2).all(|w| w[1].beta < w[0].beta && w[1].k0 < w[0].k0);
    report.assertions.push(Assertion::at_least(
        "sphere_family_monotone",
        monotone as u8 as f64,
        1.0,
        "beta(r0) and K0(r0) strictly decreasing",
    ));

    let mut worst_roundtrip = 0.0f64;
    let mut worst_bound = f64::NEG_INFINITY;
    for _ in 0..100 {
        let beta = alpha * std::f64::consts::E * log_uniform(rng, 1.0 + 1e-9, 1e8);
        let s = sphere_tangency(alpha, beta)?;
        let back = SphereTangency::from_radius(alpha, s.r0)?;
        worst_roundtrip = worst_roundtrip.max((back.beta / beta - 1.0).abs());
        worst_bound = worst_bound.max(k0_lower_bound(alpha, beta) - s.k0);
    }
    report.assertions.push(Assertion::at_most(
        "sphere_inverse_roundtrip",
        worst_roundtrip,
        1e-10,
        "max |beta(r0(beta)) / beta - 1|",
    ));
    report.assertions.push(Assertion::at_most(
        "sphere_k0_lower_bound",
        worst_bound,
        0.0,
        "max (((log(beta/2 alpha))^2 - 1)/alpha^2 - K0)",
    ));
    let near = sphere_tangency(alpha, alpha * std::f64::consts::E * (1.0 + 1e-6))?;
    report.assertions.push(Assertion::at_most(
        "sphere_threshold_asymptotics",
        near.k0.max((near.r0 - HORIZON).abs() / HORIZON),
        1e-5,
        "K0 and |r0 - e^-1|/e^-1 at beta = alpha e (1 + 1e-6)",
    ));
    Ok(())
}

/// Closed-form origin bound against direct maximisation over cap radii.
fn origin_bound(report: &mut RunReport) -> Result<()> {
    let mut worst = 0.0f64;
    for &t in &[0.02, 0.05, 0.1, 0.125, 0.2] {
        let b = origin_lower_bound(t)?;
        let f = |l: f64| cigar_flow((-l).exp(), 0.0, t).expect("admissible cap");
        let l_best = golden_max(f, 1.0 + 1e-9, 200.0);
        let r_best = (-l_best).exp();
        worst = worst
            .max((2.0 * (f(l_best) - b.v_bound)).exp_m1().abs())
            .max((r_best / b.r0_opt - 1.0).abs());
    }
    let closed = (4.0 * 0.125 * (1.0 / (4.0 * 0.125) + 1.0f64).exp()).ln() * 0.5;
    worst = worst.max((origin_lower_bound(0.125)?.v_bound - closed).abs());
    report.assertions.push(Assertion::at_most(
        "origin_bound_optimum",
        worst,
        1e-6,
        "relative mismatch of 4t e^{1/(4t)+1} and r0 = e^{-1/(4t)} vs numeric maximisation",
    ));
    Ok(())
}

pub fn run_lemmas(report: &mut RunReport) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(report.config.seed);
    let alpha = report.config.alpha;
    cigar_touching(report, &mut rng)?;
    capped_cusp_monotone(report, &mut rng)?;
    envelope(report, &mut rng)?;
    static_gradient(report)?;
    sphere_family(report, &mut rng, alpha)?;
    origin_bound(report)?;
    Ok(())
}
