//! EM warm-start for the variance hyperparameters.
//!
//! The E-step is the Kalman smoother (with lag-one cross-covariances); the
//! M-step updates each block's disturbance variance and the observation
//! variance in closed form. Damping, frequency, and AR coefficients are held
//! fixed here and refined later by the simplex search.

use super::blocks::{assemble_model, ComponentKind};
use super::spec::{ComponentSpec, ComponentValues};
use crate::error::{Error, Result};
use crate::ssm::{kalman_filter, kalman_smoother_from_filter, Observations};
use nalgebra::{DMatrix, DVector};

/// Which variance parameters EM may update.
#[derive(Debug, Clone, Copy)]
pub struct EmFreeMask {
    pub trend: bool,
    pub seasonal: bool,
    pub cycle: bool,
    pub ar: bool,
    pub obs: bool,
}

impl EmFreeMask {
    pub fn all() -> Self {
        Self { trend: true, seasonal: true, cycle: true, ar: true, obs: true }
    }

    pub fn from_spec(spec: &ComponentSpec) -> Self {
        Self {
            trend: spec.trend.as_ref().is_some_and(|t| t.variance.is_estimated()),
            seasonal: spec.seasonal.as_ref().is_some_and(|s| s.variance.is_estimated()),
            cycle: spec.cycle.as_ref().is_some_and(|c| c.variance.is_estimated()),
            ar: spec.ar.as_ref().is_some_and(|a| a.variance.is_estimated()),
            obs: spec.obs_variance.is_estimated(),
        }
    }

    fn allows(&self, kind: ComponentKind) -> bool {
        match kind {
            ComponentKind::Trend => self.trend,
            ComponentKind::Seasonal => self.seasonal,
            ComponentKind::Cycle => self.cycle,
            ComponentKind::Ar => self.ar,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmOutcome {
    pub values: ComponentValues,
    /// Complete-sample log-likelihood (all terms) evaluated at the initial
    /// parameters and after each update; EM is monotone in this quantity.
    pub loglik_trace: Vec<f64>,
    /// Diffuse-excluded log-likelihood at the returned parameter values.
    pub reported_loglik: f64,
    pub iterations: usize,
}

/// Floors keep the downstream log-transforms and innovation covariances
/// away from exact zero without disturbing genuinely small estimates.
pub(crate) fn variance_floor(data_variance: f64) -> f64 {
    1e-14 * data_variance.max(1e-12)
}

/// Run up to `max_iterations` EM updates of the variance parameters marked
/// free in `mask`, holding every other parameter fixed. Stops early when the
/// relative improvement of the complete log-likelihood falls below `tol`.
pub fn em_variances(
    start: &ComponentValues,
    obs: &Observations,
    mask: EmFreeMask,
    max_iterations: usize,
    tol: f64,
) -> Result<EmOutcome> {
    let mut values = start.clone();
    let floor = variance_floor(obs.pooled_variance());
    let mut trace: Vec<f64> = Vec::with_capacity(max_iterations + 1);
    let mut iterations = 0;
    let mut last_reported;

    loop {
        let model = assemble_model(&values)?;
        let fr = kalman_filter(&model.ssm, obs)?;
        if !fr.log_likelihood_all_terms.is_finite() {
            return Err(Error::Estimation(
                "non-finite likelihood during EM; consider rescaling the data".into(),
            ));
        }
        last_reported = fr.log_likelihood;
        trace.push(fr.log_likelihood_all_terms);

        let n = trace.len();
        let converged =
            n >= 2 && (trace[n - 1] - trace[n - 2]).abs() <= tol * (trace[n - 1].abs() + 1.0);
        if iterations >= max_iterations || converged {
            break;
        }
        iterations += 1;

        let sr = kalman_smoother_from_filter(&model.ssm, &fr, obs);

        // Expected disturbance second moments, summed over all transitions
        // (x(0)->x(1), ..., x(T-1)->x(T)).
        let p = model.layout.state_dim;
        let phi = &model.ssm.transition;
        let t_len = obs.len();
        let mut w_sum = DMatrix::<f64>::zeros(p, p);
        for t in 0..t_len {
            let (m_prev, p_prev, cross) = if t == 0 {
                (&sr.init_smoothed_mean, &sr.init_smoothed_cov, &sr.init_lag1_cross)
            } else {
                (&sr.smoothed_means[t - 1], &sr.smoothed_covs[t - 1], &sr.lag1_cross_covs[t - 1])
            };
            let m_next = &sr.smoothed_means[t];
            let p_next = &sr.smoothed_covs[t];
            let e_nn = p_next + m_next * m_next.transpose();
            let e_np = cross + m_next * m_prev.transpose();
            let e_pp = p_prev + m_prev * m_prev.transpose();
            w_sum +=
                e_nn - &e_np * phi.transpose() - phi * e_np.transpose() + phi * e_pp * phi.transpose();
        }

        // M-step per block: average the expected squared disturbance over the
        // block's noise-carrying coordinates.
        for comp in &model.layout.components {
            if !mask.allows(comp.kind) || comp.noise_coords.is_empty() {
                continue;
            }
            let total: f64 = comp.noise_coords.iter().map(|&i| w_sum[(i, i)]).sum();
            let est = (total / (comp.noise_coords.len() * t_len) as f64).max(floor);
            match comp.kind {
                ComponentKind::Trend => values.trend.as_mut().unwrap().variance = est,
                ComponentKind::Seasonal => values.seasonal.as_mut().unwrap().variance = est,
                ComponentKind::Cycle => values.cycle.as_mut().unwrap().variance = est,
                ComponentKind::Ar => values.ar.as_mut().unwrap().variance = est,
            }
        }

        // Observation variance from smoothed residual moments.
        if mask.obs {
            let a_row = match &model.ssm.obs_map {
                crate::ssm::ObsMap::Constant(a) => a.row(0).transpose().clone_owned(),
                crate::ssm::ObsMap::TimeVarying(_) => {
                    return Err(Error::Estimation("EM expects a constant observation map".into()))
                }
            };
            let mut r_sum = 0.0;
            let mut n_obs = 0usize;
            for (t, row) in obs.rows.iter().enumerate() {
                if let Some(y) = row {
                    let fitted = a_row.dot(&sr.smoothed_means[t]);
                    let spread = quadratic_form(&sr.smoothed_covs[t], &a_row);
                    r_sum += (y[0] - fitted).powi(2) + spread;
                    n_obs += 1;
                }
            }
            if n_obs > 0 {
                values.obs_variance = (r_sum / n_obs as f64).max(floor);
            }
        }
    }

    Ok(EmOutcome { values, loglik_trace: trace, reported_loglik: last_reported, iterations })
}

fn quadratic_form(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (v.transpose() * m * v)[(0, 0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structural::spec::{ComponentValues, CycleValues, TrendOrder, TrendValues};
    use crate::ssm::simulate;

    fn observations_from(values: &ComponentValues, t_len: usize, seed: u64) -> Observations {
        let model = assemble_model(values).unwrap();
        let (_, ys) = simulate(&model.ssm, t_len, seed).unwrap();
        Observations::new(ys.into_iter().map(Some).collect())
    }

    #[test]
    fn em_loglik_is_monotone() {
        let truth = ComponentValues {
            trend: Some(TrendValues { order: TrendOrder::One, variance: 0.05 }),
            seasonal: None,
            cycle: Some(CycleValues { damping: 0.9, frequency: 0.6, variance: 0.4 }),
            ar: None,
            obs_variance: 0.3,
        };
        let obs = observations_from(&truth, 300, 42);
        let start = ComponentValues {
            trend: Some(TrendValues { order: TrendOrder::One, variance: 1.0 }),
            cycle: Some(CycleValues { damping: 0.9, frequency: 0.6, variance: 1.0 }),
            obs_variance: 1.0,
            ..truth.clone()
        };
        let out = em_variances(&start, &obs, EmFreeMask::all(), 60, 0.0).unwrap();
        for w in out.loglik_trace.windows(2) {
            assert!(
                w[1] - w[0] >= -1e-9,
                "EM decreased the log-likelihood: {} -> {}",
                w[0],
                w[1]
            );
        }
        assert!(out.loglik_trace.last().unwrap() > out.loglik_trace.first().unwrap());
    }

    #[test]
    fn em_respects_fixed_variances() {
        let truth = ComponentValues {
            trend: Some(TrendValues { order: TrendOrder::One, variance: 0.05 }),
            seasonal: None,
            cycle: None,
            ar: None,
            obs_variance: 0.3,
        };
        let obs = observations_from(&truth, 200, 7);
        let start = ComponentValues {
            trend: Some(TrendValues { order: TrendOrder::One, variance: 0.5 }),
            obs_variance: 1.0,
            ..truth.clone()
        };
        let mask = EmFreeMask { trend: false, seasonal: false, cycle: false, ar: false, obs: true };
        let out = em_variances(&start, &obs, mask, 30, 0.0).unwrap();
        assert_eq!(out.values.trend.unwrap().variance, 0.5);
        assert_ne!(out.values.obs_variance, 1.0);
    }

    #[test]
    fn em_handles_missing_observations() {
        let truth = ComponentValues {
            trend: Some(TrendValues { order: TrendOrder::One, variance: 0.1 }),
            seasonal: None,
            cycle: None,
            ar: None,
            obs_variance: 0.5,
        };
        let mut obs = observations_from(&truth, 150, 3);
        obs.rows[10] = None;
        obs.rows[77] = None;
        let out = em_variances(&truth, &obs, EmFreeMask::all(), 25, 0.0).unwrap();
        for w in out.loglik_trace.windows(2) {
            assert!(w[1] - w[0] >= -1e-9);
        }
    }
}
