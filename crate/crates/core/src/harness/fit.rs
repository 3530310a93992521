//! Power-law fit `value ≈ c · t^{-p}` by least squares in log-log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub p: f64,
    pub c: f64,
    pub r_squared: f64,
    pub samples: usize,
    pub window: (f64, f64),
}

/// Fits the samples with `t` inside `window` (inclusive).
pub fn rate_fit(samples: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let (lo, hi) = window;
    let inside: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(t, _)| t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12))
        .collect();
    if inside.len() < 5 {
        return Err(Error::Fit(format!(
            "need at least 5 samples in [{lo}, {hi}], got {}",
            inside.len()
        )));
    }
    if let Some(&(t, v)) = inside.iter().find(|&&(t, v)| !(v > 0.0) || !(t > 0.0)) {
        return Err(Error::Fit(format!("nonpositive sample ({t}, {v})")));
    }
    let n = inside.len() as f64;
    let x: Vec<f64> = inside.iter().map(|(t, _)| t.ln()).collect();
    let y: Vec<f64> = inside.iter().map(|(_, v)| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("all sample times coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    // A constant series is fitted exactly.
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateFit { p: -slope, c: intercept.exp(), r_squared, samples: inside.len(), window })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn times() -> Vec<f64> {
        (0..20).map(|k| 0.03 * (0.2f64 / 0.03).powf(k as f64 / 19.0)).collect()
    }

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64)> = times().into_iter().map(|t| (t, 5.0 / (t * t))).collect();
        let f = rate_fit(&s, (0.03, 0.2)).unwrap();
        assert!((f.p - 2.0).abs() < 1e-12);
        assert!((f.c - 5.0).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series() {
        let s: Vec<(f64, f64)> = times().into_iter().map(|t| (t, 3.0)).collect();
        let f = rate_fit(&s, (0.03, 0.2)).unwrap();
        assert!(f.p.abs() < 1e-12);
    }

    #[test]
    fn oscillating_power_law() {
        let s: Vec<(f64, f64)> = times()
            .into_iter()
            .map(|t| (t, (1.0 + 0.05 * (10.0 * t.ln()).sin()) / (t * t)))
            .collect();
        let f = rate_fit(&s, (0.03, 0.2)).unwrap();
        // Independent regression on the same points.
        let (xs, ys): (Vec<f64>, Vec<f64>) = s.iter().map(|(t, v)| (t.ln(), v.ln())).unzip();
        let n = xs.len() as f64;
        let (sx, sy) = (xs.iter().sum::<f64>(), ys.iter().sum::<f64>());
        let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
        let sxx: f64 = xs.iter().map(|a| a * a).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!((f.p + slope).abs() < 1e-10);
        assert!(f.p >= 1.9 && f.p <= 2.1, "{}", f.p);
    }

    #[test]
    fn guards() {
        let s: Vec<(f64, f64)> = times().into_iter().take(4).map(|t| (t, 1.0)).collect();
        assert!(rate_fit(&s, (0.03, 0.2)).is_err());
        let mut s: Vec<(f64, f64)> = times().into_iter().map(|t| (t, 1.0)).collect();
        s[3].1 = 0.0;
        assert!(rate_fit(&s, (0.03, 0.2)).is_err());
    }
}
