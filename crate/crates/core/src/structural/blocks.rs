//! State-space blocks for the structural components and their assembly
//! into a single model.

use super::spec::{ArValues, ComponentValues, CycleValues, SeasonalValues, SeasonalVariant, TrendOrder, TrendValues};
use crate::error::{Error, Result};
use crate::ssm::{ObsMap, StateSpaceModel};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// One structural component in state-space form.
#[derive(Debug, Clone)]
pub struct Block {
    pub transition: DMatrix<f64>,
    /// Local state indices that receive the block's disturbance; they share
    /// one variance.
    pub noise_coords: Vec<usize>,
    pub noise_variance: f64,
    /// Local observation weights (how the block enters the measurement).
    pub obs_row: DVector<f64>,
    pub init_mean: DVector<f64>,
    /// Finite part of the initial covariance (stationary solution where one
    /// exists).
    pub init_cov: DMatrix<f64>,
    pub diffuse: Vec<bool>,
    pub kind: ComponentKind,
}

impl Block {
    pub fn dim(&self) -> usize {
        self.transition.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Trend,
    Seasonal,
    Cycle,
    Ar,
}

/// Trend block: order 1 is a random walk, order 2 an integrated random walk
/// with noise on the slope only.
pub fn build_trend_block(order: TrendOrder, variance: f64) -> Result<Block> {
    if variance < 0.0 {
        return Err(Error::InvalidParam(format!("trend variance {variance} must be nonnegative")));
    }
    let block = match order {
        TrendOrder::One => Block {
            transition: DMatrix::from_element(1, 1, 1.0),
            noise_coords: vec![0],
            noise_variance: variance,
            obs_row: DVector::from_element(1, 1.0),
            init_mean: DVector::zeros(1),
            init_cov: DMatrix::zeros(1, 1),
            diffuse: vec![true],
            kind: ComponentKind::Trend,
        },
        TrendOrder::Two => Block {
            transition: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            noise_coords: vec![1],
            noise_variance: variance,
            obs_row: DVector::from_row_slice(&[1.0, 0.0]),
            init_mean: DVector::zeros(2),
            init_cov: DMatrix::zeros(2, 2),
            diffuse: vec![true, true],
            kind: ComponentKind::Trend,
        },
    };
    Ok(block)
}

/// Seasonal block.
///
/// Running-sum variant: (s-1)-state dummy seasonal whose sum over any s
/// consecutive values is N(0, variance). Seasonal-difference variant:
/// trigonometric realization with s-1 states, each harmonic an undamped
/// rotation at 2*pi*j/s with common disturbance variance, so that
/// S(t) - S(t-s) is a moving average of the disturbances.
pub fn build_seasonal_block(variant: SeasonalVariant, period: usize, variance: f64) -> Result<Block> {
    if period < 2 {
        return Err(Error::InvalidParam(format!("seasonal period {period} must be at least 2")));
    }
    if variance < 0.0 {
        return Err(Error::InvalidParam(format!(
            "seasonal variance {variance} must be nonnegative"
        )));
    }
    let dim = period - 1;
    match variant {
        SeasonalVariant::RunningSum => {
            let mut transition = DMatrix::zeros(dim, dim);
            for j in 0..dim {
                transition[(0, j)] = -1.0;
            }
            for i in 1..dim {
                transition[(i, i - 1)] = 1.0;
            }
            let mut obs_row = DVector::zeros(dim);
            obs_row[0] = 1.0;
            Ok(Block {
                transition,
                noise_coords: vec![0],
                noise_variance: variance,
                obs_row,
                init_mean: DVector::zeros(dim),
                init_cov: DMatrix::zeros(dim, dim),
                diffuse: vec![true; dim],
                kind: ComponentKind::Seasonal,
            })
        }
        SeasonalVariant::SeasonalDifference => {
            let mut transition = DMatrix::zeros(dim, dim);
            let mut obs_row = DVector::zeros(dim);
            let mut offset = 0;
            for j in 1..=period / 2 {
                let lambda = 2.0 * std::f64::consts::PI * j as f64 / period as f64;
                if 2 * j < period {
                    let (c, s) = (lambda.cos(), lambda.sin());
                    transition[(offset, offset)] = c;
                    transition[(offset, offset + 1)] = s;
                    transition[(offset + 1, offset)] = -s;
                    transition[(offset + 1, offset + 1)] = c;
                    obs_row[offset] = 1.0;
                    offset += 2;
                } else {
                    // Nyquist harmonic for even periods.
                    transition[(offset, offset)] = -1.0;
                    obs_row[offset] = 1.0;
                    offset += 1;
                }
            }
            debug_assert_eq!(offset, dim);
            Ok(Block {
                transition,
                noise_coords: (0..dim).collect(),
                noise_variance: variance,
                obs_row,
                init_mean: DVector::zeros(dim),
                init_cov: DMatrix::zeros(dim, dim),
                diffuse: vec![true; dim],
                kind: ComponentKind::Seasonal,
            })
        }
    }
}

/// Stochastic cycle: a damped rotation driven by two uncorrelated
/// disturbances with common variance; only the first state is observed.
pub fn build_cycle_block(damping: f64, frequency: f64, variance: f64) -> Result<Block> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidParam(format!("damping {damping} must lie in (0, 1]")));
    }
    if !(frequency > 0.0 && frequency <= std::f64::consts::PI) {
        return Err(Error::InvalidParam(format!("cycle frequency {frequency} must lie in (0, pi]")));
    }
    if variance < 0.0 {
        return Err(Error::InvalidParam(format!("cycle variance {variance} must be nonnegative")));
    }
    let (c, s) = (frequency.cos(), frequency.sin());
    let transition = damping * DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
    let (init_cov, diffuse) = if damping < 1.0 {
        // Stationary covariance of the rotation: variance/(1-rho^2) * I.
        let v = variance / (1.0 - damping * damping);
        (DMatrix::from_diagonal_element(2, 2, v), vec![false, false])
    } else {
        (DMatrix::zeros(2, 2), vec![true, true])
    };
    Ok(Block {
        transition,
        noise_coords: vec![0, 1],
        noise_variance: variance,
        obs_row: DVector::from_row_slice(&[1.0, 0.0]),
        init_mean: DVector::zeros(2),
        init_cov,
        diffuse,
        kind: ComponentKind::Cycle,
    })
}

/// Stationary AR(1) or AR(2) block in companion form.
pub fn build_ar_block(coeffs: &[f64], variance: f64) -> Result<Block> {
    if coeffs.is_empty() || coeffs.len() > 2 {
        return Err(Error::InvalidParam(format!("AR order {} must be 1 or 2", coeffs.len())));
    }
    if variance < 0.0 {
        return Err(Error::InvalidParam(format!("AR variance {variance} must be nonnegative")));
    }
    if !ar_is_stationary(coeffs) {
        return Err(Error::InvalidParam(format!(
            "AR coefficients {coeffs:?} are not stationary"
        )));
    }
    let dim = coeffs.len();
    let mut transition = DMatrix::zeros(dim, dim);
    for (j, &c) in coeffs.iter().enumerate() {
        transition[(0, j)] = c;
    }
    for i in 1..dim {
        transition[(i, i - 1)] = 1.0;
    }
    let mut noise_cov = DMatrix::zeros(dim, dim);
    noise_cov[(0, 0)] = variance;
    let init_cov = stationary_cov(&transition, &noise_cov)?;
    let mut obs_row = DVector::zeros(dim);
    obs_row[0] = 1.0;
    Ok(Block {
        transition,
        noise_coords: vec![0],
        noise_variance: variance,
        obs_row,
        init_mean: DVector::zeros(dim),
        init_cov,
        diffuse: vec![false; dim],
        kind: ComponentKind::Ar,
    })
}

/// Stationarity of an AR(1)/AR(2) lag polynomial (roots outside the unit
/// circle).
pub fn ar_is_stationary(coeffs: &[f64]) -> bool {
    match coeffs {
        [phi1] => phi1.abs() < 1.0,
        [phi1, phi2] => phi2.abs() < 1.0 && phi1 + phi2 < 1.0 && phi2 - phi1 < 1.0,
        _ => false,
    }
}

/// Solve the discrete Lyapunov equation P = Phi P Phi' + Q by vectorization.
fn stationary_cov(phi: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = phi.nrows();
    let eye = DMatrix::<f64>::identity(n * n, n * n);
    let kron = phi.kronecker(phi);
    let lhs = eye - kron;
    let rhs = DVector::from_column_slice(q.as_slice());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("stationary covariance solve failed".into()))?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

/// Layout of one component inside the assembled state vector.
#[derive(Debug, Clone)]
pub struct ComponentLayout {
    pub kind: ComponentKind,
    pub start: usize,
    pub dim: usize,
    pub obs_row: DVector<f64>,
    /// Global state indices carrying this component's disturbance.
    pub noise_coords: Vec<usize>,
}

/// Mapping between the assembled state vector and the structural
/// components.
#[derive(Debug, Clone)]
pub struct ModelLayout {
    pub components: Vec<ComponentLayout>,
    pub state_dim: usize,
}

impl ModelLayout {
    pub fn component(&self, kind: ComponentKind) -> Option<&ComponentLayout> {
        self.components.iter().find(|c| c.kind == kind)
    }
}

/// A structural model: the state-space form plus its component layout.
#[derive(Debug, Clone)]
pub struct StructuralModel {
    pub ssm: StateSpaceModel,
    pub layout: ModelLayout,
}

/// Assemble the block-diagonal state-space model for a set of component
/// values. The observation row selects trend level, current seasonal, the
/// cycle's first state, and the AR state; R is the observation variance.
pub fn assemble_model(values: &ComponentValues) -> Result<StructuralModel> {
    let mut blocks: Vec<Block> = Vec::new();
    if let Some(TrendValues { order, variance }) = values.trend {
        blocks.push(build_trend_block(order, variance)?);
    }
    if let Some(SeasonalValues { variant, period, variance }) = values.seasonal {
        blocks.push(build_seasonal_block(variant, period, variance)?);
    }
    if let Some(CycleValues { damping, frequency, variance }) = values.cycle {
        blocks.push(build_cycle_block(damping, frequency, variance)?);
    }
    if let Some(ArValues { ref coeffs, variance }) = values.ar {
        blocks.push(build_ar_block(coeffs, variance)?);
    }
    if blocks.is_empty() {
        return Err(Error::InvalidParam("at least one component must be present".into()));
    }
    if values.obs_variance < 0.0 {
        return Err(Error::InvalidParam(format!(
            "observation variance {} must be nonnegative",
            values.obs_variance
        )));
    }

    let p: usize = blocks.iter().map(Block::dim).sum();
    let mut transition = DMatrix::zeros(p, p);
    let mut state_noise = DMatrix::zeros(p, p);
    let mut obs = DMatrix::zeros(1, p);
    let mut init_mean = DVector::zeros(p);
    let mut init_cov = DMatrix::zeros(p, p);
    let mut diffuse = Vec::with_capacity(p);
    let mut components = Vec::with_capacity(blocks.len());

    let mut start = 0;
    for block in &blocks {
        let d = block.dim();
        transition.view_mut((start, start), (d, d)).copy_from(&block.transition);
        init_cov.view_mut((start, start), (d, d)).copy_from(&block.init_cov);
        init_mean.rows_mut(start, d).copy_from(&block.init_mean);
        for &c in &block.noise_coords {
            state_noise[(start + c, start + c)] = block.noise_variance;
        }
        for i in 0..d {
            obs[(0, start + i)] = block.obs_row[i];
        }
        diffuse.extend_from_slice(&block.diffuse);
        components.push(ComponentLayout {
            kind: block.kind,
            start,
            dim: d,
            obs_row: block.obs_row.clone(),
            noise_coords: block.noise_coords.iter().map(|&c| start + c).collect(),
        });
        start += d;
    }

    let ssm = StateSpaceModel::new(
        ObsMap::Constant(obs),
        transition,
        state_noise,
        DMatrix::from_element(1, 1, values.obs_variance),
        init_mean,
        init_cov,
        diffuse,
    )?;
    Ok(StructuralModel { ssm, layout: ModelLayout { components, state_dim: p } })
}
