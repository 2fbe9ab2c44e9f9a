//! Independent oracles and data generators used by the test suites.
//!
//! Everything here checks results by a different computational route than
//! the library code: dense joint-Gaussian conditioning instead of Kalman
//! recursions, exhaustive path enumeration instead of the Hamilton filter.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tsdec_core::ssm::{ObsMap, Observations, StateSpaceModel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Result of conditioning the dense joint Gaussian of all states on the
/// observed data.
pub struct DenseConditional {
    pub smoothed_means: Vec<DVector<f64>>,
    pub smoothed_covs: Vec<DMatrix<f64>>,
    /// `lag1[t] = Cov(x(t+1), x(t) | data)` in step indexing (entry t couples
    /// steps t+1 and t of the sample).
    pub lag1_cross_covs: Vec<DMatrix<f64>>,
    /// Pre-sample state x(0) given all data, and Cov(x(1), x(0) | data).
    pub init_smoothed_mean: DVector<f64>,
    pub init_smoothed_cov: DMatrix<f64>,
    pub init_lag1_cross: DMatrix<f64>,
    /// Log-density of the observed data under the joint Gaussian (all terms,
    /// no diffuse exclusion).
    pub log_likelihood: f64,
}

/// Brute-force conditional of states given observations.
///
/// Builds the full covariance of the stacked states (x(0), x(1), ..., x(T))
/// by propagating the transition, conditions on the observed rows, and
/// evaluates the joint Gaussian density, all with dense linear algebra.
/// O((pT)^3): use only for small systems.
pub fn dense_conditional(model: &StateSpaceModel, obs: &Observations) -> DenseConditional {
    let p = model.state_dim();
    let q = model.obs_dim();
    let t_len = obs.len();
    let n_states = t_len + 1; // includes the pre-sample x(0)
    let phi = &model.transition;

    let mut mean_z = DVector::zeros(p * n_states);
    let mut cov_z = DMatrix::zeros(p * n_states, p * n_states);

    let sigma0 = model.effective_init_cov(obs.pooled_variance());
    mean_z.rows_mut(0, p).copy_from(&model.init_mean);
    cov_z.view_mut((0, 0), (p, p)).copy_from(&sigma0);

    let mut m_t = model.init_mean.clone();
    let mut c_tt = sigma0;
    for t in 1..n_states {
        // Cross blocks: Cov(x(t), x(s)) = Phi Cov(x(t-1), x(s)) for s < t.
        for s in 0..t {
            let prev = cov_z.view(((t - 1) * p, s * p), (p, p)).clone_owned();
            let cross = phi * prev;
            cov_z.view_mut((t * p, s * p), (p, p)).copy_from(&cross);
            cov_z.view_mut((s * p, t * p), (p, p)).copy_from(&cross.transpose());
        }
        m_t = phi * m_t;
        c_tt = phi * c_tt * phi.transpose() + &model.state_noise_cov;
        mean_z.rows_mut(t * p, p).copy_from(&m_t);
        cov_z.view_mut((t * p, t * p), (p, p)).copy_from(&c_tt);
    }

    // Stack observed steps: y = H z + noise. Observation step t sees x(t+1)
    // in the stacked indexing (block t+1).
    let observed: Vec<usize> = (0..t_len).filter(|&t| obs.rows[t].is_some()).collect();
    let n_y = observed.len() * q;
    let mut h = DMatrix::zeros(n_y, p * n_states);
    let mut y = DVector::zeros(n_y);
    let mut r_blk = DMatrix::zeros(n_y, n_y);
    for (k, &t) in observed.iter().enumerate() {
        h.view_mut((k * q, (t + 1) * p), (q, p)).copy_from(model.obs_map.at(t));
        y.rows_mut(k * q, q).copy_from(obs.rows[t].as_ref().unwrap());
        r_blk.view_mut((k * q, k * q), (q, q)).copy_from(&model.obs_noise_cov);
    }

    let mean_y = &h * &mean_z;
    let cov_zy = &cov_z * h.transpose();
    let cov_yy = &h * &cov_zy + r_blk;

    let chol = cov_yy
        .clone()
        .cholesky()
        .expect("oracle: observation covariance must be positive definite");
    let resid = &y - &mean_y;
    let alpha = chol.solve(&resid);
    let log_det: f64 = (0..n_y).map(|i| 2.0 * chol.l()[(i, i)].ln()).sum();
    let log_likelihood =
        -0.5 * (n_y as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + resid.dot(&alpha));

    // E[z|y] and Cov(z|y).
    let gain = chol.solve(&cov_zy.transpose()).transpose();
    let post_mean = &mean_z + &gain * &resid;
    let post_cov = &cov_z - &gain * cov_zy.transpose();

    let block_mean = |t: usize| post_mean.rows(t * p, p).clone_owned();
    let block_cov = |t: usize, s: usize| post_cov.view((t * p, s * p), (p, p)).clone_owned();

    let smoothed_means = (1..n_states).map(block_mean).collect();
    let smoothed_covs = (1..n_states).map(|t| block_cov(t, t)).collect();
    let lag1_cross_covs = (1..n_states - 1).map(|t| block_cov(t + 1, t)).collect();

    DenseConditional {
        smoothed_means,
        smoothed_covs,
        lag1_cross_covs,
        init_smoothed_mean: block_mean(0),
        init_smoothed_cov: block_cov(0, 0),
        init_lag1_cross: block_cov(1, 0),
        log_likelihood,
    }
}

/// Random PSD matrix with eigenvalues bounded away from zero.
pub fn random_psd(rng: &mut impl Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    scale * (&g * g.transpose() / n as f64) + DMatrix::identity(n, n) * (0.05 * scale)
}

/// Random stable state-space model (spectral radius of the transition in
/// roughly (0.3, 0.95)), full-rank noise, non-diffuse initial law.
pub fn random_stable_model(rng: &mut impl Rng, p: usize, q: usize) -> StateSpaceModel {
    let raw = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let radius = raw
        .complex_eigenvalues()
        .iter()
        .map(|l| l.norm())
        .fold(0.0f64, f64::max)
        .max(1e-6);
    let target: f64 = rng.gen_range(0.3..0.95);
    let phi = raw * (target / radius);

    let a = DMatrix::from_fn(q, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let (sq, sr, ss) =
        (rng.gen_range(0.2..1.5), rng.gen_range(0.2..1.5), rng.gen_range(0.2..1.5));
    let state_q = random_psd(rng, p, sq);
    let obs_r = random_psd(rng, q, sr);
    let mu = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let sigma = random_psd(rng, p, ss);

    StateSpaceModel::new(ObsMap::Constant(a), phi, state_q, obs_r, mu, sigma, vec![false; p])
        .expect("random model must validate")
}

/// Largest principal angle, in degrees, between the row spaces of two
/// path matrices (rows = paths). Rows are centered before comparison.
pub fn principal_angle_deg(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.ncols(), b.ncols(), "path lengths must agree");
    let center = |m: &DMatrix<f64>| {
        let mut c = m.transpose();
        for mut col in c.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        c
    };
    let qa = center(a).qr().q();
    let qb = center(b).qr().q();
    let s = (qa.transpose() * qb).svd(false, false).singular_values;
    let cos = s.min().clamp(-1.0, 1.0);
    cos.acos().to_degrees()
}

/// Pearson correlation between two equal-length slices.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cab = 0.0;
    let mut caa = 0.0;
    let mut cbb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cab += (x - ma) * (y - mb);
        caa += (x - ma).powi(2);
        cbb += (y - mb).powi(2);
    }
    cab / (caa.sqrt() * cbb.sqrt())
}
