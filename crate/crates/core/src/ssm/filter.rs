//! Kalman filter with missing-data handling and prediction-error
//! log-likelihood.

use super::{symmetrize, Observations, StateSpaceModel, INNOVATION_COND_LIMIT};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Per-step filter output.
///
/// `log_likelihood` excludes the first `d` observed scalar dimensions
/// (`d` = number of diffuse states) so that models with different diffuse
/// dimensions compare fairly; `log_likelihood_all_terms` keeps every term
/// and is the quantity EM is monotone for.
#[derive(Debug, Clone)]
pub struct FilterResult {
    pub predicted_means: Vec<DVector<f64>>,
    pub predicted_covs: Vec<DMatrix<f64>>,
    pub filtered_means: Vec<DVector<f64>>,
    pub filtered_covs: Vec<DMatrix<f64>>,
    /// One-step prediction errors; `None` at missing steps.
    pub innovations: Vec<Option<DVector<f64>>>,
    pub innovation_covs: Vec<Option<DMatrix<f64>>>,
    pub log_likelihood: f64,
    pub log_likelihood_all_terms: f64,
    /// Number of observed steps whose likelihood terms were excluded as
    /// diffuse burn-in.
    pub n_burnin_steps: usize,
}

/// Eigendecomposition-based solve bundle for a symmetric innovation
/// covariance: log-determinant, inverse application, and condition check.
struct SymSolve {
    vectors: DMatrix<f64>,
    inv_values: DVector<f64>,
    log_det: f64,
}

impl SymSolve {
    fn new(s: &DMatrix<f64>, step: usize) -> Result<Self> {
        let eig = symmetrize(s).symmetric_eigen();
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max.is_finite() && min.is_finite()) {
            return Err(Error::Numerical(format!("non-finite innovation covariance at step {step}")));
        }
        let cond = if min > 0.0 { max / min } else { f64::INFINITY };
        if min <= 0.0 || cond > INNOVATION_COND_LIMIT {
            return Err(Error::SingularInnovation { step, cond });
        }
        let log_det = eig.eigenvalues.iter().map(|l| l.ln()).sum();
        let inv_values = eig.eigenvalues.map(|l| 1.0 / l);
        Ok(Self { vectors: eig.eigenvectors, inv_values, log_det })
    }

    fn solve_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        let w = self.vectors.transpose() * v;
        &self.vectors * w.component_mul(&self.inv_values)
    }

    fn solve_mat(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut w = self.vectors.transpose() * m;
        for (i, mut row) in w.row_iter_mut().enumerate() {
            row *= self.inv_values[i];
        }
        &self.vectors * w
    }
}

/// Run the Kalman filter over an observation sequence.
///
/// Missing steps skip the update (filtered = predicted) and contribute no
/// likelihood term.
pub fn kalman_filter(model: &StateSpaceModel, obs: &Observations) -> Result<FilterResult> {
    let p = model.state_dim();
    let q = model.obs_dim();
    let t_len = obs.len();
    if t_len == 0 {
        return Err(Error::InvalidData("observation sequence is empty".into()));
    }
    if let super::ObsMap::TimeVarying(seq) = &model.obs_map {
        if seq.len() != t_len {
            return Err(Error::Dimension(format!(
                "time-varying obs map has {} entries for {} observation times",
                seq.len(),
                t_len
            )));
        }
    }
    for (t, row) in obs.rows.iter().enumerate() {
        if let Some(y) = row {
            if y.len() != q {
                return Err(Error::Dimension(format!(
                    "observation at step {t} has length {}, expected {q}",
                    y.len()
                )));
            }
        }
    }

    let init_cov = model.effective_init_cov(obs.pooled_variance());
    let phi = &model.transition;

    let mut predicted_means = Vec::with_capacity(t_len);
    let mut predicted_covs = Vec::with_capacity(t_len);
    let mut filtered_means = Vec::with_capacity(t_len);
    let mut filtered_covs = Vec::with_capacity(t_len);
    let mut innovations = Vec::with_capacity(t_len);
    let mut innovation_covs = Vec::with_capacity(t_len);

    // x(0) ~ N(mu, Sigma) is pre-sample; the first observation sees the
    // prediction of x(1).
    let mut x_pred = phi * &model.init_mean;
    let mut p_pred = symmetrize(&(phi * &init_cov * phi.transpose() + &model.state_noise_cov));

    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let d = model.n_diffuse();
    let mut obs_dims_seen = 0usize;
    let mut burnin_steps = 0usize;
    let mut ll_reported = 0.0;
    let mut ll_all = 0.0;

    for (t, row) in obs.rows.iter().enumerate() {
        predicted_means.push(x_pred.clone());
        predicted_covs.push(p_pred.clone());

        match row {
            Some(y) => {
                let a = model.obs_map.at(t);
                let innovation = y - a * &x_pred;
                let s = symmetrize(&(a * &p_pred * a.transpose() + &model.obs_noise_cov));
                let solver = SymSolve::new(&s, t)?;

                let quad = innovation.dot(&solver.solve_vec(&innovation));
                let term = -0.5 * (q as f64 * ln_2pi + solver.log_det + quad);
                ll_all += term;
                if obs_dims_seen < d {
                    burnin_steps += 1;
                } else {
                    ll_reported += term;
                }
                obs_dims_seen += q;

                // K = P A' S^{-1}
                let gain = &p_pred * a.transpose() * solver.solve_mat(&DMatrix::identity(q, q));
                let x_filt = &x_pred + &gain * &innovation;
                // Joseph form: P = (I-KA) P (I-KA)' + K R K'
                let i_kh = DMatrix::identity(p, p) - &gain * a;
                let p_joseph =
                    &i_kh * &p_pred * i_kh.transpose() + &gain * &model.obs_noise_cov * gain.transpose();
                // Asymmetry is rounding noise relative to the covariance scale
                // flowing through the update (the prediction covariance can be
                // on the diffuse-surrogate scale while the update resolves it
                // to data scale).
                debug_assert!(
                    (&p_joseph - p_joseph.transpose()).abs().max()
                        <= 1e-10 * p_pred.abs().max().max(p_joseph.abs().max()).max(1.0),
                    "covariance update lost symmetry at step {t}"
                );
                let p_filt = symmetrize(&p_joseph);

                innovations.push(Some(innovation));
                innovation_covs.push(Some(s));
                filtered_means.push(x_filt);
                filtered_covs.push(p_filt);
            }
            None => {
                innovations.push(None);
                innovation_covs.push(None);
                filtered_means.push(x_pred.clone());
                filtered_covs.push(p_pred.clone());
            }
        }

        let x_filt = filtered_means.last().unwrap();
        let p_filt = filtered_covs.last().unwrap();
        x_pred = phi * x_filt;
        p_pred = symmetrize(&(phi * p_filt * phi.transpose() + &model.state_noise_cov));
    }

    Ok(FilterResult {
        predicted_means,
        predicted_covs,
        filtered_means,
        filtered_covs,
        innovations,
        innovation_covs,
        log_likelihood: ll_reported,
        log_likelihood_all_terms: ll_all,
        n_burnin_steps: burnin_steps,
    })
}

/// Prediction-error-decomposition log-likelihood (diffuse burn-in excluded).
pub fn log_likelihood(model: &StateSpaceModel, obs: &Observations) -> Result<f64> {
    Ok(kalman_filter(model, obs)?.log_likelihood)
}
