//! Model simulation for test data and fixtures.

use super::{symmetrize, StateSpaceModel};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Square root of a PSD matrix via symmetric eigendecomposition, with tiny
/// negative eigenvalues clamped to zero.
fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| if l > 0.0 { l.sqrt() } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

fn draw(rng: &mut impl Rng, mean: &DVector<f64>, sqrt_cov: &DMatrix<f64>) -> DVector<f64> {
    let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    mean + sqrt_cov * z
}

/// Draw `x(0) ~ N(mu, Sigma)` and iterate the state/observation equations
/// for `length` steps. Returns the states `x(1..length)` and observations
/// `y(1..length)`. Reproducible for a fixed seed.
///
/// Simulation uses the stored (finite) initial covariance; diffuse flags
/// only affect filtering.
pub fn simulate(
    model: &StateSpaceModel,
    length: usize,
    seed: u64,
) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>)> {
    if length == 0 {
        return Err(Error::InvalidData("simulation length must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q_sqrt = psd_sqrt(&model.state_noise_cov);
    let r_sqrt = psd_sqrt(&model.obs_noise_cov);
    let init_sqrt = psd_sqrt(&model.init_cov);
    let zero_obs = DVector::zeros(model.obs_dim());

    let mut states = Vec::with_capacity(length);
    let mut observations = Vec::with_capacity(length);
    let mut x = draw(&mut rng, &model.init_mean, &init_sqrt);
    for t in 0..length {
        let mean = &model.transition * &x;
        x = draw(&mut rng, &mean, &q_sqrt);
        let y_mean = model.obs_map.at(t) * &x;
        let y = &y_mean + draw(&mut rng, &zero_obs, &r_sqrt);
        states.push(x.clone());
        observations.push(y);
    }
    Ok((states, observations))
}
