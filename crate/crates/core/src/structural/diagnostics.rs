//! Residual diagnostics on standardized one-step innovations.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResidualDiagnostics {
    pub ljung_box_stat: f64,
    pub ljung_box_lags: usize,
    pub ljung_box_pvalue: f64,
    /// Jarque-Bera statistic.
    pub normality_stat: f64,
    pub normality_pvalue: f64,
}

fn chi2_sf(stat: f64, dof: f64) -> f64 {
    if !(stat.is_finite() && dof > 0.0) {
        return f64::NAN;
    }
    match ChiSquared::new(dof) {
        Ok(dist) => 1.0 - dist.cdf(stat.max(0.0)),
        Err(_) => f64::NAN,
    }
}

/// Ljung-Box portmanteau statistic on `residuals` with `lags` lags.
pub fn ljung_box(residuals: &[f64], lags: usize) -> (f64, f64) {
    let n = residuals.len();
    if n <= lags + 1 || lags == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mean = residuals.iter().sum::<f64>() / nf;
    let denom: f64 = residuals.iter().map(|r| (r - mean).powi(2)).sum();
    if denom <= 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let mut stat = 0.0;
    for h in 1..=lags {
        let mut num = 0.0;
        for t in h..n {
            num += (residuals[t] - mean) * (residuals[t - h] - mean);
        }
        let r = num / denom;
        stat += r * r / (nf - h as f64);
    }
    stat *= nf * (nf + 2.0);
    (stat, chi2_sf(stat, lags as f64))
}

/// Jarque-Bera normality statistic.
pub fn jarque_bera(residuals: &[f64]) -> (f64, f64) {
    let n = residuals.len();
    if n < 8 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mean = residuals.iter().sum::<f64>() / nf;
    let m2 = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / nf;
    if m2 <= 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let m3 = residuals.iter().map(|r| (r - mean).powi(3)).sum::<f64>() / nf;
    let m4 = residuals.iter().map(|r| (r - mean).powi(4)).sum::<f64>() / nf;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    let stat = nf / 6.0 * (skew * skew + 0.25 * (kurt - 3.0).powi(2));
    (stat, chi2_sf(stat, 2.0))
}

/// Diagnostics bundle for a residual sequence.
pub fn residual_diagnostics(residuals: &[f64]) -> ResidualDiagnostics {
    let lags = (residuals.len() / 5).clamp(1, 20);
    let (lb, lb_p) = ljung_box(residuals, lags);
    let (jb, jb_p) = jarque_bera(residuals);
    ResidualDiagnostics {
        ljung_box_stat: lb,
        ljung_box_lags: lags,
        ljung_box_pvalue: lb_p,
        normality_stat: jb,
        normality_pvalue: jb_p,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn white_noise_passes_both_tests() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let resid: Vec<f64> =
            (0..400).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let (lb, lb_p) = ljung_box(&resid, 20);
        assert!(lb.is_finite());
        assert!(lb_p > 0.01, "white noise rejected by Ljung-Box: p={lb_p}");
        let (_, jb_p) = jarque_bera(&resid);
        assert!(jb_p > 0.01, "white noise rejected by Jarque-Bera: p={jb_p}");
    }

    #[test]
    fn strong_autocorrelation_is_detected() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let mut resid = vec![0.0f64; 400];
        for t in 1..400 {
            resid[t] = 0.9 * resid[t - 1] + rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        let (_, p) = ljung_box(&resid, 20);
        assert!(p < 1e-6);
    }

    #[test]
    fn short_series_yields_nan() {
        let (s, p) = ljung_box(&[1.0, 2.0], 5);
        assert!(s.is_nan() && p.is_nan());
    }
}
