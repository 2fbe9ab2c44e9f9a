//! Component specifications: which pieces a model contains, which
//! hyperparameters are fixed, and which are to be estimated.

use crate::error::{Error, Result};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

/// A hyperparameter that is either pinned to a value or estimated from data.
///
/// Serializes as the number itself or the string `"estimate"`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Param {
    Fixed(f64),
    #[default]
    Estimate,
}

impl Param {
    pub fn fixed_value(&self) -> Option<f64> {
        match self {
            Param::Fixed(v) => Some(*v),
            Param::Estimate => None,
        }
    }

    pub fn is_estimated(&self) -> bool {
        matches!(self, Param::Estimate)
    }

    /// Concrete value, falling back to `default` when estimated.
    pub fn value_or(&self, default: f64) -> f64 {
        self.fixed_value().unwrap_or(default)
    }
}

impl Serialize for Param {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Param::Fixed(v) => serializer.serialize_f64(*v),
            Param::Estimate => serializer.serialize_str("estimate"),
        }
    }
}

impl<'de> Deserialize<'de> for Param {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(v) => Ok(Param::Fixed(v)),
            Raw::Text(s) if s.eq_ignore_ascii_case("estimate") => Ok(Param::Estimate),
            Raw::Text(s) => Err(de::Error::custom(format!(
                "expected a number or \"estimate\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrendOrder {
    /// Random walk level.
    #[serde(rename = "1")]
    One,
    /// Integrated random walk (noise on the slope only).
    #[serde(rename = "2")]
    Two,
}

impl TrendOrder {
    pub fn state_dim(self) -> usize {
        match self {
            TrendOrder::One => 1,
            TrendOrder::Two => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeasonalVariant {
    /// Running sum over a period constrained to white noise.
    RunningSum,
    /// Period-over-period differences constrained to noise, realized in
    /// trigonometric form with s-1 states.
    SeasonalDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSpec {
    pub order: TrendOrder,
    pub variance: Param,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalSpec {
    pub variant: SeasonalVariant,
    pub period: usize,
    pub variance: Param,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    pub damping: Param,
    pub frequency: Param,
    pub variance: Param,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArSpec {
    pub order: usize,
    /// One entry per lag; either all fixed or all estimated.
    pub coeffs: Vec<Param>,
    pub variance: Param,
}

/// Which components a structural model contains and what to estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ComponentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trend: Option<TrendSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seasonal: Option<SeasonalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<CycleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ar: Option<ArSpec>,
    pub obs_variance: Param,
}

impl ComponentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trend.is_none() && self.seasonal.is_none() && self.cycle.is_none() && self.ar.is_none()
        {
            return Err(Error::InvalidParam("at least one component must be present".into()));
        }
        if let Some(seasonal) = &self.seasonal {
            if seasonal.period < 2 {
                return Err(Error::InvalidParam(format!(
                    "seasonal period {} must be at least 2",
                    seasonal.period
                )));
            }
            check_nonneg("seasonal variance", seasonal.variance)?;
        }
        if let Some(trend) = &self.trend {
            check_nonneg("trend variance", trend.variance)?;
        }
        if let Some(cycle) = &self.cycle {
            if let Some(rho) = cycle.damping.fixed_value() {
                if !(rho > 0.0 && rho <= 1.0) {
                    return Err(Error::InvalidParam(format!("damping {rho} must lie in (0, 1]")));
                }
            }
            if let Some(freq) = cycle.frequency.fixed_value() {
                if !(freq > 0.0 && freq <= std::f64::consts::PI) {
                    return Err(Error::InvalidParam(format!(
                        "cycle frequency {freq} must lie in (0, pi]"
                    )));
                }
            }
            check_nonneg("cycle variance", cycle.variance)?;
        }
        if let Some(ar) = &self.ar {
            if ar.order == 0 || ar.order > 2 {
                return Err(Error::InvalidParam(format!("AR order {} must be 1 or 2", ar.order)));
            }
            if ar.coeffs.len() != ar.order {
                return Err(Error::InvalidParam(format!(
                    "AR order {} needs {} coefficients, got {}",
                    ar.order,
                    ar.order,
                    ar.coeffs.len()
                )));
            }
            let n_est = ar.coeffs.iter().filter(|c| c.is_estimated()).count();
            if n_est != 0 && n_est != ar.coeffs.len() {
                return Err(Error::InvalidParam(
                    "AR coefficients must be all fixed or all estimated".into(),
                ));
            }
            check_nonneg("AR variance", ar.variance)?;
        }
        check_nonneg("observation variance", self.obs_variance)?;
        Ok(())
    }

    /// Number of estimated hyperparameters.
    pub fn n_free_params(&self) -> usize {
        let mut n = usize::from(self.obs_variance.is_estimated());
        if let Some(t) = &self.trend {
            n += usize::from(t.variance.is_estimated());
        }
        if let Some(s) = &self.seasonal {
            n += usize::from(s.variance.is_estimated());
        }
        if let Some(c) = &self.cycle {
            n += usize::from(c.damping.is_estimated());
            n += usize::from(c.frequency.is_estimated());
            n += usize::from(c.variance.is_estimated());
        }
        if let Some(a) = &self.ar {
            n += a.coeffs.iter().filter(|c| c.is_estimated()).count();
            n += usize::from(a.variance.is_estimated());
        }
        n
    }
}

/// Fully resolved component parameters (every hyperparameter numeric).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentValues {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trend: Option<TrendValues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seasonal: Option<SeasonalValues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<CycleValues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ar: Option<ArValues>,
    pub obs_variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendValues {
    pub order: TrendOrder,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonalValues {
    pub variant: SeasonalVariant,
    pub period: usize,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleValues {
    pub damping: f64,
    pub frequency: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArValues {
    pub coeffs: Vec<f64>,
    pub variance: f64,
}

fn check_nonneg(name: &str, p: Param) -> Result<()> {
    if let Some(v) = p.fixed_value() {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParam(format!("{name} must be nonnegative, got {v}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_serde_roundtrip() {
        #[derive(Serialize, Deserialize)]
        struct Wrap {
            p: Param,
            q: Param,
        }
        let w: Wrap = toml::from_str("p = 0.5\nq = \"estimate\"").unwrap();
        assert_eq!(w.p, Param::Fixed(0.5));
        assert_eq!(w.q, Param::Estimate);
        let s = toml::to_string(&w).unwrap();
        assert!(s.contains("p = 0.5"));
        assert!(s.contains("q = \"estimate\""));
    }

    #[test]
    fn empty_spec_rejected() {
        let spec = ComponentSpec { obs_variance: Param::Estimate, ..Default::default() };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn mixed_ar_coeff_estimation_rejected() {
        let spec = ComponentSpec {
            ar: Some(ArSpec {
                order: 2,
                coeffs: vec![Param::Fixed(0.3), Param::Estimate],
                variance: Param::Estimate,
            }),
            obs_variance: Param::Fixed(1.0),
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn free_param_count() {
        let spec = ComponentSpec {
            trend: Some(TrendSpec { order: TrendOrder::Two, variance: Param::Estimate }),
            cycle: Some(CycleSpec {
                damping: Param::Estimate,
                frequency: Param::Estimate,
                variance: Param::Estimate,
            }),
            obs_variance: Param::Estimate,
            ..Default::default()
        };
        assert_eq!(spec.n_free_params(), 5);
    }
}
