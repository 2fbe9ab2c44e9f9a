//! Candidate-model fitting and information-criterion ranking.

use super::fit::{fit_mle, DecompositionResult, FitConfig};
use super::spec::ComponentSpec;
use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
}

impl Criterion {
    pub fn value(&self, result: &DecompositionResult) -> f64 {
        match self {
            Criterion::Aic => result.aic,
            Criterion::Bic => result.bic,
        }
    }
}

#[derive(Debug)]
pub struct RankedFit {
    /// Index of the candidate in the input list.
    pub spec_index: usize,
    pub result: DecompositionResult,
    pub criterion_value: f64,
}

#[derive(Debug)]
pub struct SelectionOutcome {
    /// Successful fits, best (lowest criterion) first; ties broken by fewer
    /// parameters, then input order.
    pub ranked: Vec<RankedFit>,
    /// Candidates that failed to fit, with the failure.
    pub failures: Vec<(usize, Error)>,
}

/// Fit every candidate spec concurrently and rank by the chosen criterion.
pub fn select_model(
    specs: &[ComponentSpec],
    y: &TimeSeries,
    criterion: Criterion,
    config: &FitConfig,
) -> Result<SelectionOutcome> {
    if specs.is_empty() {
        return Err(Error::InvalidParam("no candidate specs given".into()));
    }
    let fits: Vec<(usize, Result<DecompositionResult>)> = specs
        .par_iter()
        .enumerate()
        .map(|(idx, spec)| (idx, fit_mle(spec, y, config)))
        .collect();

    let mut ranked = Vec::new();
    let mut failures = Vec::new();
    for (idx, fit) in fits {
        match fit {
            Ok(result) => {
                let criterion_value = criterion.value(&result);
                ranked.push(RankedFit { spec_index: idx, result, criterion_value });
            }
            Err(e) => failures.push((idx, e)),
        }
    }
    if ranked.is_empty() {
        return Err(Error::Estimation("every candidate spec failed to fit".into()));
    }
    ranked.sort_by(|a, b| {
        a.criterion_value
            .partial_cmp(&b.criterion_value)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.result.n_params.cmp(&b.result.n_params))
            .then(a.spec_index.cmp(&b.spec_index))
    });
    Ok(SelectionOutcome { ranked, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structural::spec::{Param, TrendOrder, TrendSpec};
    use crate::timeseries::MonthStamp;

    #[test]
    fn single_candidate_ranks_first() {
        let spec = ComponentSpec {
            trend: Some(TrendSpec { order: TrendOrder::One, variance: Param::Estimate }),
            obs_variance: Param::Estimate,
            ..Default::default()
        };
        let values: Vec<f64> = (0..60).map(|t| (t as f64 * 0.05) + (t as f64 * 0.7).sin()).collect();
        let y = TimeSeries::new(values, MonthStamp::new(1980, 1).unwrap(), 1).unwrap();
        let out = select_model(&[spec], &y, Criterion::Aic, &FitConfig::default()).unwrap();
        assert_eq!(out.ranked.len(), 1);
        assert_eq!(out.ranked[0].spec_index, 0);
        assert!(out.failures.is_empty());
    }

    #[test]
    fn empty_candidate_list_rejected() {
        let y = TimeSeries::new(vec![0.0; 50], MonthStamp::new(1980, 1).unwrap(), 1).unwrap();
        assert!(select_model(&[], &y, Criterion::Bic, &FitConfig::default()).is_err());
    }
}
