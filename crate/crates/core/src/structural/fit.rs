//! Maximum-likelihood fitting of a component spec: EM warm-start over a
//! grid of cycle frequencies, then simplex refinement of all free
//! parameters under variance/log, damping/logit, and frequency/scaled-logit
//! transforms.

use super::blocks::{assemble_model, ComponentKind, StructuralModel};
use super::diagnostics::{residual_diagnostics, ResidualDiagnostics};
use super::em::{em_variances, variance_floor, EmFreeMask};
use super::spec::{
    ArValues, ComponentSpec, ComponentValues, CycleValues, SeasonalValues, TrendValues,
};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, SimplexOptions};
use crate::ssm::{kalman_filter, kalman_smoother_from_filter, Observations};
use crate::timeseries::{MonthStamp, TimeSeries};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    /// EM iterations per warm start.
    pub em_iterations: usize,
    pub em_tol: f64,
    /// Simplex iteration cap.
    pub max_iterations: usize,
    /// Relative log-likelihood convergence tolerance for the simplex.
    pub rel_tol: f64,
    /// Number of cycle-frequency starting points.
    pub grid_points: usize,
    /// Shortest starting period considered for the cycle, in months.
    pub min_period_months: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            em_iterations: 50,
            em_tol: 1e-8,
            max_iterations: 500,
            rel_tol: 1e-9,
            grid_points: 8,
            min_period_months: 18.0,
        }
    }
}

/// Smoothed path of one component with pointwise variances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentPath {
    pub values: Vec<f64>,
    pub variances: Vec<f64>,
}

impl ComponentPath {
    fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len], variances: vec![0.0; len] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub trend: ComponentPath,
    pub seasonal: ComponentPath,
    pub cycle: ComponentPath,
    pub irregular: ComponentPath,
    /// Sum of the component paths: the smoothed signal (observed y minus
    /// smoothed observation error).
    pub smoothed_signal: Vec<f64>,
    pub fitted: ComponentValues,
    pub log_likelihood: f64,
    pub n_params: usize,
    /// Observed steps net of diffuse burn-in; used by BIC.
    pub t_effective: usize,
    pub aic: f64,
    pub bic: f64,
    pub diagnostics: ResidualDiagnostics,
    pub converged: bool,
    pub start: MonthStamp,
    pub step_months: u32,
}

impl DecompositionResult {
    pub fn component(&self, kind: ComponentKind) -> &ComponentPath {
        match kind {
            ComponentKind::Trend => &self.trend,
            ComponentKind::Seasonal => &self.seasonal,
            ComponentKind::Cycle => &self.cycle,
            ComponentKind::Ar => &self.irregular,
        }
    }

    pub fn component_series(&self, kind: ComponentKind) -> TimeSeries {
        TimeSeries::new(self.component(kind).values.clone(), self.start, self.step_months)
            .expect("component path is a valid series")
    }
}

// ---------------------------------------------------------------------------
// Parameter transforms
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    TrendVar,
    SeasonalVar,
    CycleVar,
    CycleDamping,
    CycleFreq,
    ArVar,
    ArCoeff(usize),
    ObsVar,
}

fn logit(u: f64) -> f64 {
    let u = u.clamp(1e-9, 1.0 - 1e-9);
    (u / (1.0 - u)).ln()
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

struct ParamCoder {
    slots: Vec<Slot>,
    floor: f64,
}

impl ParamCoder {
    fn from_spec(spec: &ComponentSpec, floor: f64) -> Self {
        let mut slots = Vec::new();
        if spec.trend.as_ref().is_some_and(|t| t.variance.is_estimated()) {
            slots.push(Slot::TrendVar);
        }
        if spec.seasonal.as_ref().is_some_and(|s| s.variance.is_estimated()) {
            slots.push(Slot::SeasonalVar);
        }
        if let Some(c) = &spec.cycle {
            if c.variance.is_estimated() {
                slots.push(Slot::CycleVar);
            }
            if c.damping.is_estimated() {
                slots.push(Slot::CycleDamping);
            }
            if c.frequency.is_estimated() {
                slots.push(Slot::CycleFreq);
            }
        }
        if let Some(a) = &spec.ar {
            if a.variance.is_estimated() {
                slots.push(Slot::ArVar);
            }
            if a.coeffs.iter().any(|c| c.is_estimated()) {
                for lag in 0..a.order {
                    slots.push(Slot::ArCoeff(lag));
                }
            }
        }
        if spec.obs_variance.is_estimated() {
            slots.push(Slot::ObsVar);
        }
        Self { slots, floor }
    }

    fn encode(&self, values: &ComponentValues) -> Vec<f64> {
        let enc_var = |v: f64| v.max(self.floor).ln();
        let pacf = ar_to_pacf(values.ar.as_ref().map(|a| a.coeffs.as_slice()).unwrap_or(&[]));
        self.slots
            .iter()
            .map(|slot| match slot {
                Slot::TrendVar => enc_var(values.trend.as_ref().unwrap().variance),
                Slot::SeasonalVar => enc_var(values.seasonal.as_ref().unwrap().variance),
                Slot::CycleVar => enc_var(values.cycle.as_ref().unwrap().variance),
                Slot::CycleDamping => logit(values.cycle.as_ref().unwrap().damping),
                Slot::CycleFreq => {
                    logit(values.cycle.as_ref().unwrap().frequency / std::f64::consts::PI)
                }
                Slot::ArVar => enc_var(values.ar.as_ref().unwrap().variance),
                Slot::ArCoeff(lag) => pacf[*lag].clamp(-1.0 + 1e-9, 1.0 - 1e-9).atanh(),
                Slot::ObsVar => enc_var(values.obs_variance),
            })
            .collect()
    }

    fn decode(&self, theta: &[f64], base: &ComponentValues) -> ComponentValues {
        let mut values = base.clone();
        let mut pacf = ar_to_pacf(base.ar.as_ref().map(|a| a.coeffs.as_slice()).unwrap_or(&[]));
        for (slot, &t) in self.slots.iter().zip(theta) {
            match slot {
                Slot::TrendVar => values.trend.as_mut().unwrap().variance = t.exp(),
                Slot::SeasonalVar => values.seasonal.as_mut().unwrap().variance = t.exp(),
                Slot::CycleVar => values.cycle.as_mut().unwrap().variance = t.exp(),
                Slot::CycleDamping => {
                    values.cycle.as_mut().unwrap().damping = sigmoid(t).clamp(1e-6, 1.0 - 1e-9)
                }
                Slot::CycleFreq => {
                    values.cycle.as_mut().unwrap().frequency =
                        (sigmoid(t) * std::f64::consts::PI).clamp(1e-9, std::f64::consts::PI)
                }
                Slot::ArVar => values.ar.as_mut().unwrap().variance = t.exp(),
                Slot::ArCoeff(lag) => pacf[*lag] = t.tanh(),
                Slot::ObsVar => values.obs_variance = t.exp(),
            }
        }
        if self.slots.iter().any(|s| matches!(s, Slot::ArCoeff(_))) {
            values.ar.as_mut().unwrap().coeffs = pacf_to_ar(&pacf);
        }
        values
    }
}

/// Partial-autocorrelation parameterization of a stationary AR(1)/AR(2)
/// polynomial (Monahan's recursion restricted to order 2).
fn ar_to_pacf(coeffs: &[f64]) -> Vec<f64> {
    match coeffs {
        [phi1] => vec![*phi1],
        [phi1, phi2] => {
            let p2 = *phi2;
            let p1 = if (1.0 - p2).abs() > 1e-12 { phi1 / (1.0 - p2) } else { 0.0 };
            vec![p1.clamp(-1.0 + 1e-9, 1.0 - 1e-9), p2.clamp(-1.0 + 1e-9, 1.0 - 1e-9)]
        }
        _ => Vec::new(),
    }
}

fn pacf_to_ar(pacf: &[f64]) -> Vec<f64> {
    match pacf {
        [p1] => vec![*p1],
        [p1, p2] => vec![p1 * (1.0 - p2), *p2],
        _ => Vec::new(),
    }
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

/// Default initial values for every estimated parameter, scaled to the data.
fn initial_values(spec: &ComponentSpec, data_variance: f64) -> ComponentValues {
    let v = data_variance.max(1e-12);
    ComponentValues {
        trend: spec.trend.as_ref().map(|t| TrendValues {
            order: t.order,
            variance: t.variance.value_or(1e-3 * v),
        }),
        seasonal: spec.seasonal.as_ref().map(|s| SeasonalValues {
            variant: s.variant,
            period: s.period,
            variance: s.variance.value_or(1e-3 * v),
        }),
        cycle: spec.cycle.as_ref().map(|c| CycleValues {
            damping: c.damping.value_or(0.9),
            frequency: c.frequency.value_or(2.0 * std::f64::consts::PI / 40.0),
            variance: c.variance.value_or(0.1 * v),
        }),
        ar: spec.ar.as_ref().map(|a| ArValues {
            coeffs: a
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c.value_or(if k == 0 { 0.2 } else { 0.1 }))
                .collect(),
            variance: a.variance.value_or(0.1 * v),
        }),
        obs_variance: spec.obs_variance.value_or(0.5 * v),
    }
}

/// Cycle-frequency starting grid: `n` periods logarithmically spaced between
/// `min_period_months` and T/3 samples.
fn frequency_grid(n: usize, t_len: usize, step_months: u32, min_period_months: f64) -> Vec<f64> {
    let lo = (min_period_months / step_months as f64).max(2.5);
    let hi = (t_len as f64 / 3.0).max(lo * 1.2);
    let n = n.max(1);
    (0..n)
        .map(|k| {
            let f = if n == 1 { 0.5 } else { k as f64 / (n - 1) as f64 };
            let period = lo * (hi / lo).powf(f);
            (2.0 * std::f64::consts::PI / period).clamp(1e-6, std::f64::consts::PI)
        })
        .collect()
}

/// Fit a component spec to a series by maximum likelihood.
pub fn fit_mle(spec: &ComponentSpec, y: &TimeSeries, config: &FitConfig) -> Result<DecompositionResult> {
    spec.validate()?;
    let obs = Observations::from(y);
    if obs.n_observed() == 0 {
        return Err(Error::InvalidData("series has no observed values".into()));
    }
    let data_variance = obs.pooled_variance();
    let base = initial_values(spec, data_variance);
    let probe_model = assemble_model(&base)?;
    let p = probe_model.layout.state_dim;
    if y.len() < 4 * p {
        return Err(Error::InvalidData(format!(
            "series length {} is shorter than 4x the state dimension {p}",
            y.len()
        )));
    }

    // EM warm start, over a frequency grid when the cycle frequency is free.
    let mask = EmFreeMask::from_spec(spec);
    let freq_is_free = spec.cycle.as_ref().is_some_and(|c| c.frequency.is_estimated());
    let starts: Vec<ComponentValues> = if freq_is_free {
        frequency_grid(config.grid_points, y.len(), y.step_months, config.min_period_months)
            .into_iter()
            .map(|freq| {
                let mut v = base.clone();
                v.cycle.as_mut().unwrap().frequency = freq;
                v
            })
            .collect()
    } else {
        vec![base.clone()]
    };

    let mut best: Option<(f64, ComponentValues)> = None;
    for start in &starts {
        match em_variances(start, &obs, mask, config.em_iterations, config.em_tol) {
            Ok(out) => {
                let better = best.as_ref().map_or(true, |(ll, _)| out.reported_loglik > *ll);
                if out.reported_loglik.is_finite() && better {
                    best = Some((out.reported_loglik, out.values));
                }
            }
            Err(Error::Estimation(_)) if starts.len() > 1 => continue,
            Err(e) => return Err(e),
        }
    }
    let (warm_ll, warm) = best.ok_or_else(|| {
        Error::Estimation("non-finite likelihood at every starting point; consider rescaling".into())
    })?;

    // Simplex refinement of all free parameters.
    let coder = ParamCoder::from_spec(spec, variance_floor(data_variance));
    let theta0 = coder.encode(&warm);
    if !warm_ll.is_finite() {
        return Err(Error::Estimation(
            "non-finite likelihood at the initial point; consider rescaling the data".into(),
        ));
    }

    let objective = |theta: &[f64]| -> f64 {
        let values = coder.decode(theta, &warm);
        match assemble_model(&values).and_then(|m| kalman_filter(&m.ssm, &obs)) {
            Ok(fr) => -fr.log_likelihood,
            Err(_) => f64::INFINITY,
        }
    };

    let (final_values, converged) = if theta0.is_empty() {
        (warm, true)
    } else {
        let opts = SimplexOptions {
            max_iterations: config.max_iterations,
            rel_tol: config.rel_tol,
            initial_step: 0.25,
        };
        let out = nelder_mead(objective, &theta0, &opts);
        // Keep the warm-start values if the simplex somehow ended worse.
        if -out.value >= warm_ll {
            (coder.decode(&out.x, &warm), out.converged)
        } else {
            (warm, false)
        }
    };

    decompose_at(spec, &final_values, y, &obs, converged)
}

/// Smooth at fixed parameter values and package the decomposition.
fn decompose_at(
    spec: &ComponentSpec,
    values: &ComponentValues,
    y: &TimeSeries,
    obs: &Observations,
    converged: bool,
) -> Result<DecompositionResult> {
    let StructuralModel { ssm, layout } = assemble_model(values)?;
    let fr = kalman_filter(&ssm, obs)?;
    let sr = kalman_smoother_from_filter(&ssm, &fr, obs);
    let t_len = obs.len();

    let mut paths = [
        ComponentPath::zeros(t_len),
        ComponentPath::zeros(t_len),
        ComponentPath::zeros(t_len),
        ComponentPath::zeros(t_len),
    ];
    for comp in &layout.components {
        let idx = match comp.kind {
            ComponentKind::Trend => 0,
            ComponentKind::Seasonal => 1,
            ComponentKind::Cycle => 2,
            ComponentKind::Ar => 3,
        };
        for t in 0..t_len {
            let state = sr.smoothed_means[t].rows(comp.start, comp.dim);
            let cov = sr.smoothed_covs[t].view((comp.start, comp.start), (comp.dim, comp.dim));
            paths[idx].values[t] = comp.obs_row.dot(&state.clone_owned());
            paths[idx].variances[t] =
                (comp.obs_row.transpose() * cov * &comp.obs_row)[(0, 0)].max(0.0);
        }
    }
    let [trend, seasonal, cycle, irregular] = paths;
    let smoothed_signal: Vec<f64> = (0..t_len)
        .map(|t| trend.values[t] + seasonal.values[t] + cycle.values[t] + irregular.values[t])
        .collect();

    // Standardized innovations past the diffuse burn-in.
    let mut std_resid = Vec::new();
    let mut observed_seen = 0usize;
    for t in 0..t_len {
        if let (Some(v), Some(s)) = (&fr.innovations[t], &fr.innovation_covs[t]) {
            observed_seen += 1;
            if observed_seen > fr.n_burnin_steps {
                std_resid.push(v[0] / s[(0, 0)].sqrt());
            }
        }
    }

    let n_params = spec.n_free_params();
    let t_effective = obs.n_observed().saturating_sub(fr.n_burnin_steps);
    let ll = fr.log_likelihood;
    let aic = -2.0 * ll + 2.0 * n_params as f64;
    let bic = -2.0 * ll + (t_effective.max(1) as f64).ln() * n_params as f64;

    Ok(DecompositionResult {
        trend,
        seasonal,
        cycle,
        irregular,
        smoothed_signal,
        fitted: values.clone(),
        log_likelihood: ll,
        n_params,
        t_effective,
        aic,
        bic,
        diagnostics: residual_diagnostics(&std_resid),
        converged,
        start: y.start,
        step_months: y.step_months,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structural::spec::{Param, TrendOrder, TrendSpec};

    #[test]
    fn pacf_transform_roundtrip() {
        for coeffs in [vec![0.5], vec![-0.7], vec![0.5, 0.2], vec![-0.3, 0.4], vec![1.2, -0.5]] {
            let pacf = ar_to_pacf(&coeffs);
            let back = pacf_to_ar(&pacf);
            for (a, b) in coeffs.iter().zip(&back) {
                assert!((a - b).abs() < 1e-9, "{coeffs:?} -> {pacf:?} -> {back:?}");
            }
            assert!(super::super::blocks::ar_is_stationary(&back) || coeffs.len() > 2);
        }
    }

    #[test]
    fn frequency_grid_spans_requested_periods() {
        let grid = frequency_grid(8, 1200, 1, 18.0);
        assert_eq!(grid.len(), 8);
        let periods: Vec<f64> = grid.iter().map(|f| 2.0 * std::f64::consts::PI / f).collect();
        assert!((periods[0] - 18.0).abs() < 1e-9);
        assert!((periods[7] - 400.0).abs() < 1e-6);
        for w in periods.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn short_series_rejected() {
        let spec = ComponentSpec {
            trend: Some(TrendSpec { order: TrendOrder::Two, variance: Param::Estimate }),
            obs_variance: Param::Estimate,
            ..Default::default()
        };
        let y = TimeSeries::new(vec![1.0, 2.0, 3.0], MonthStamp::new(2000, 1).unwrap(), 1).unwrap();
        assert!(matches!(fit_mle(&spec, &y, &FitConfig::default()), Err(Error::InvalidData(_))));
    }
}
