//! Fixed-interval smoother in disturbance-smoother form, with the lag-one
//! cross-covariances needed by EM.
//!
//! Backward recursions build the weighting vectors r and matrices N from the
//! filter innovations; smoothed means then follow the forward state
//! recursion `a(t+1) = Phi a(t) + Q r(t)`, which preserves deterministic
//! (zero-noise) transition constraints exactly.

use super::filter::{kalman_filter, FilterResult};
use super::{symmetrize, Observations, StateSpaceModel};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct SmootherResult {
    pub smoothed_means: Vec<DVector<f64>>,
    pub smoothed_covs: Vec<DMatrix<f64>>,
    /// `lag1_cross_covs[t] = Cov(x(t+2), x(t+1) | all data)` in sample
    /// indexing, i.e. entry `t` couples observation steps `t+1` and `t`.
    pub lag1_cross_covs: Vec<DMatrix<f64>>,
    /// Smoothed pre-sample state x(0), its covariance, and
    /// `Cov(x(1), x(0) | all data)`; used by EM for the first transition.
    pub init_smoothed_mean: DVector<f64>,
    pub init_smoothed_cov: DMatrix<f64>,
    pub init_lag1_cross: DMatrix<f64>,
}

/// Smooth a completed filter pass.
pub fn kalman_smoother_from_filter(
    model: &StateSpaceModel,
    fr: &FilterResult,
    obs: &Observations,
) -> SmootherResult {
    let p = model.state_dim();
    let t_len = fr.filtered_means.len();
    let phi = &model.transition;
    let eye = DMatrix::<f64>::identity(p, p);

    // Backward pass: r_store[t] and n_store[t] hold the weights entering
    // step t (r_{t-1} and N_{t-1} in the usual indexing); l_store[t] holds
    // L_t = Phi (I - K_t A_t), with K_t = 0 at missing steps.
    let mut r = DVector::<f64>::zeros(p);
    let mut n = DMatrix::<f64>::zeros(p, p);
    let mut r_store = vec![DVector::<f64>::zeros(p); t_len];
    let mut n_store = vec![DMatrix::<f64>::zeros(p, p); t_len];
    let mut l_store = vec![DMatrix::<f64>::zeros(p, p); t_len];

    for t in (0..t_len).rev() {
        match (&fr.innovations[t], &fr.innovation_covs[t]) {
            (Some(v), Some(s)) => {
                let a = model.obs_map.at(t);
                let chol = symmetrize(s)
                    .cholesky()
                    .expect("innovation covariance validated during filtering");
                let s_inv_v = chol.solve(v);
                let s_inv_a = chol.solve(&a.clone_owned());
                // Filtered gain K = P_pred A' S^{-1}.
                let gain = &fr.predicted_covs[t] * a.transpose() * chol.inverse();
                let l = phi * (&eye - &gain * a);
                r = a.transpose() * &s_inv_v + l.transpose() * &r;
                n = symmetrize(&(a.transpose() * &s_inv_a + l.transpose() * &n * &l));
                l_store[t] = l;
            }
            _ => {
                r = phi.transpose() * &r;
                n = symmetrize(&(phi.transpose() * &n * phi));
                l_store[t] = phi.clone();
            }
        }
        r_store[t] = r.clone();
        n_store[t] = n.clone();
    }

    // Smoothed means: anchor at the first step, then run the state recursion
    // forward so zero-noise coordinates satisfy their transition exactly.
    let mut means = Vec::with_capacity(t_len);
    means.push(&fr.predicted_means[0] + &fr.predicted_covs[0] * &r_store[0]);
    for t in 1..t_len {
        let r_t = &r_store[t];
        means.push(phi * &means[t - 1] + &model.state_noise_cov * r_t);
    }

    // Smoothed covariances V_t = P_pred - P_pred N_{t-1} P_pred.
    let mut covs = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let p_pred = &fr.predicted_covs[t];
        covs.push(symmetrize(&(p_pred - p_pred * &n_store[t] * p_pred)));
    }

    // Lag-one: Cov(x(t+1), x(t) | Y) = (I - P_pred(t+1) N_t) L_t P_pred(t).
    let mut lag1 = Vec::with_capacity(t_len.saturating_sub(1));
    for t in 0..t_len.saturating_sub(1) {
        let n_t = &n_store[t + 1];
        lag1.push((&eye - &fr.predicted_covs[t + 1] * n_t) * &l_store[t] * &fr.predicted_covs[t]);
    }

    // Pre-sample state x(0): prediction (mu, Sigma), transition Phi to x(1).
    let sigma0 = model.effective_init_cov(obs.pooled_variance());
    let init_smoothed_mean = &model.init_mean + &sigma0 * phi.transpose() * &r_store[0];
    let init_smoothed_cov = symmetrize(
        &(&sigma0 - &sigma0 * phi.transpose() * &n_store[0] * phi * &sigma0),
    );
    let init_lag1_cross = (&eye - &fr.predicted_covs[0] * &n_store[0]) * phi * &sigma0;

    SmootherResult {
        smoothed_means: means,
        smoothed_covs: covs,
        lag1_cross_covs: lag1,
        init_smoothed_mean,
        init_smoothed_cov,
        init_lag1_cross,
    }
}

/// Filter then smooth in one call.
pub fn kalman_smoother(model: &StateSpaceModel, obs: &Observations) -> Result<SmootherResult> {
    if obs.is_empty() {
        return Err(Error::InvalidData("observation sequence is empty".into()));
    }
    let fr = kalman_filter(model, obs)?;
    Ok(kalman_smoother_from_filter(model, &fr, obs))
}
