//! Linear Gaussian state-space machinery: model representation, Kalman
//! filter/smoother, log-likelihood, and simulation.
//!
//! Observation equation: `y(t) = A(t) x(t) + v(t)`, `v ~ N(0, R)`.
//! State equation: `x(t) = Phi x(t-1) + w(t)`, `w ~ N(0, Q)`,
//! with `x(0) ~ N(mu, Sigma)` pre-sample; the first observation sees the
//! one-step prediction of `x(1)`.

mod filter;
mod simulate;
mod smoother;

pub use filter::{kalman_filter, log_likelihood, FilterResult};
pub use simulate::simulate;
pub use smoother::{kalman_smoother, kalman_smoother_from_filter, SmootherResult};

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;
use nalgebra::{DMatrix, DVector};

/// Variance multiplier used as the large-variance surrogate for diffuse
/// initial states.
pub const DIFFUSE_SCALE: f64 = 1e7;

/// Condition-number threshold above which an innovation covariance is
/// treated as singular.
pub const INNOVATION_COND_LIMIT: f64 = 1e12;

/// Observation map, either fixed or one matrix per observation time.
#[derive(Debug, Clone)]
pub enum ObsMap {
    Constant(DMatrix<f64>),
    TimeVarying(Vec<DMatrix<f64>>),
}

impl ObsMap {
    pub fn at(&self, t: usize) -> &DMatrix<f64> {
        match self {
            ObsMap::Constant(a) => a,
            ObsMap::TimeVarying(seq) => &seq[t],
        }
    }

    fn dims(&self) -> Result<(usize, usize)> {
        match self {
            ObsMap::Constant(a) => Ok((a.nrows(), a.ncols())),
            ObsMap::TimeVarying(seq) => {
                let first = seq
                    .first()
                    .ok_or_else(|| Error::Dimension("time-varying obs map is empty".into()))?;
                let dims = (first.nrows(), first.ncols());
                if seq.iter().any(|a| (a.nrows(), a.ncols()) != dims) {
                    return Err(Error::Dimension("time-varying obs map has ragged dimensions".into()));
                }
                Ok(dims)
            }
        }
    }
}

/// The linear Gaussian system of the observation/state equations.
#[derive(Debug, Clone)]
pub struct StateSpaceModel {
    pub obs_map: ObsMap,
    pub transition: DMatrix<f64>,
    pub state_noise_cov: DMatrix<f64>,
    pub obs_noise_cov: DMatrix<f64>,
    pub init_mean: DVector<f64>,
    /// Proper (finite) part of the initial covariance. Entries belonging to
    /// diffuse states are replaced by a large-variance surrogate at filter
    /// time; simulation uses this matrix as stored.
    pub init_cov: DMatrix<f64>,
    /// Per-state diffuse flags for nonstationary states.
    pub diffuse: Vec<bool>,
}

impl StateSpaceModel {
    pub fn new(
        obs_map: ObsMap,
        transition: DMatrix<f64>,
        state_noise_cov: DMatrix<f64>,
        obs_noise_cov: DMatrix<f64>,
        init_mean: DVector<f64>,
        init_cov: DMatrix<f64>,
        diffuse: Vec<bool>,
    ) -> Result<Self> {
        let (q, p) = obs_map.dims()?;
        if q == 0 || p == 0 {
            return Err(Error::Dimension("state and observation dimensions must be positive".into()));
        }
        check_square("transition", &transition, p)?;
        check_square("state noise covariance", &state_noise_cov, p)?;
        check_square("obs noise covariance", &obs_noise_cov, q)?;
        check_square("initial covariance", &init_cov, p)?;
        if init_mean.len() != p {
            return Err(Error::Dimension(format!(
                "initial mean has length {}, expected {p}",
                init_mean.len()
            )));
        }
        if diffuse.len() != p {
            return Err(Error::Dimension(format!(
                "diffuse flags have length {}, expected {p}",
                diffuse.len()
            )));
        }
        check_psd("state noise covariance Q", &state_noise_cov)?;
        check_psd("obs noise covariance R", &obs_noise_cov)?;
        check_psd("initial covariance Sigma", &init_cov)?;
        Ok(Self {
            obs_map,
            transition,
            state_noise_cov,
            obs_noise_cov,
            init_mean,
            init_cov,
            diffuse,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.transition.nrows()
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_noise_cov.nrows()
    }

    pub fn n_diffuse(&self) -> usize {
        self.diffuse.iter().filter(|&&d| d).count()
    }

    /// Initial covariance with diffuse diagonal entries replaced by
    /// `DIFFUSE_SCALE * data_variance` (off-diagonal entries involving a
    /// diffuse state are zeroed).
    pub fn effective_init_cov(&self, data_variance: f64) -> DMatrix<f64> {
        let surrogate = if data_variance > 0.0 { DIFFUSE_SCALE * data_variance } else { DIFFUSE_SCALE };
        let p = self.state_dim();
        let mut cov = self.init_cov.clone();
        for i in 0..p {
            if self.diffuse[i] {
                for j in 0..p {
                    cov[(i, j)] = 0.0;
                    cov[(j, i)] = 0.0;
                }
                cov[(i, i)] = surrogate;
            }
        }
        cov
    }
}

fn check_square(name: &str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension(format!(
            "{name} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Symmetric PSD check: all eigenvalues at least `-1e-10 * trace`.
fn check_psd(name: &str, m: &DMatrix<f64>) -> Result<()> {
    let asym = (m - m.transpose()).abs().max();
    let scale = m.abs().max().max(1.0);
    if asym > 1e-8 * scale {
        return Err(Error::InvalidParam(format!("{name} is not symmetric")));
    }
    let sym = symmetrize(m);
    let eig = sym.symmetric_eigenvalues();
    let tol = -1e-10 * m.trace().abs().max(1.0);
    if eig.iter().any(|&l| l < tol) {
        return Err(Error::InvalidParam(format!(
            "{name} is not positive semidefinite (min eigenvalue {:.3e})",
            eig.min()
        )));
    }
    Ok(())
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// Observation sequence for filtering: one vector per time step, `None`
/// marking a wholly missing step.
#[derive(Debug, Clone)]
pub struct Observations {
    pub rows: Vec<Option<DVector<f64>>>,
}

impl Observations {
    pub fn new(rows: Vec<Option<DVector<f64>>>) -> Self {
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_observed(&self) -> usize {
        self.rows.iter().filter(|r| r.is_some()).count()
    }

    /// Population variance pooled over all observed entries; drives the
    /// diffuse surrogate scale.
    pub fn pooled_variance(&self) -> f64 {
        let mut vals = Vec::new();
        for row in self.rows.iter().flatten() {
            vals.extend(row.iter().copied());
        }
        if vals.is_empty() {
            return 0.0;
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64
    }
}

impl From<&TimeSeries> for Observations {
    fn from(ts: &TimeSeries) -> Self {
        let rows = ts
            .values
            .iter()
            .zip(&ts.missing)
            .map(|(&v, &m)| if m { None } else { Some(DVector::from_element(1, v)) })
            .collect();
        Self { rows }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(n: usize) -> DMatrix<f64> {
        DMatrix::identity(n, n)
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let bad = StateSpaceModel::new(
            ObsMap::Constant(DMatrix::from_row_slice(1, 2, &[1.0, 0.0])),
            eye(3),
            eye(3),
            eye(1),
            DVector::zeros(3),
            eye(3),
            vec![false; 3],
        );
        assert!(matches!(bad, Err(Error::Dimension(_))));
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let bad = StateSpaceModel::new(
            ObsMap::Constant(eye(1)),
            eye(1),
            DMatrix::from_element(1, 1, -0.5),
            eye(1),
            DVector::zeros(1),
            eye(1),
            vec![false],
        );
        assert!(matches!(bad, Err(Error::InvalidParam(_))));
    }

    #[test]
    fn diffuse_surrogate_replaces_entries() {
        let model = StateSpaceModel::new(
            ObsMap::Constant(DMatrix::from_row_slice(1, 2, &[1.0, 0.0])),
            eye(2),
            eye(2),
            eye(1),
            DVector::zeros(2),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 2.0]),
            vec![true, false],
        )
        .unwrap();
        let cov = model.effective_init_cov(3.0);
        assert_eq!(cov[(0, 0)], 3e7);
        assert_eq!(cov[(1, 1)], 2.0);
        assert_eq!(cov[(0, 1)], 0.0);
        assert_eq!(model.n_diffuse(), 1);
    }
}
