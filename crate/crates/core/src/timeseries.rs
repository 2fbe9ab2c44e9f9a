//! Uniformly sampled scalar time series with calendar metadata and a
//! missing-value mask.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// A calendar month, the time resolution used throughout the library.
///
/// Serialized as ISO `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MonthStamp {
    pub year: i32,
    /// 1-based month, 1..=12.
    pub month: u32,
}

impl MonthStamp {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidData(format!("month {month} out of range 1..=12")));
        }
        Ok(Self { year, month })
    }

    /// Stamp shifted by `n` months (may be negative).
    pub fn add_months(self, n: i64) -> Self {
        let total = self.year as i64 * 12 + (self.month as i64 - 1) + n;
        Self { year: total.div_euclid(12) as i32, month: (total.rem_euclid(12) + 1) as u32 }
    }

    /// Signed number of months from `other` to `self`.
    pub fn months_since(self, other: Self) -> i64 {
        (self.year as i64 * 12 + self.month as i64) - (other.year as i64 * 12 + other.month as i64)
    }
}

impl fmt::Display for MonthStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthStamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| Error::InvalidData(format!("time stamp `{s}` is not YYYY-MM")))?;
        let year: i32 = y
            .parse()
            .map_err(|_| Error::InvalidData(format!("bad year in time stamp `{s}`")))?;
        let month: u32 = m
            .parse()
            .map_err(|_| Error::InvalidData(format!("bad month in time stamp `{s}`")))?;
        Self::new(year, month)
    }
}

impl TryFrom<String> for MonthStamp {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MonthStamp> for String {
    fn from(m: MonthStamp) -> String {
        m.to_string()
    }
}

/// A uniformly sampled scalar series with time metadata and missing-value mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub start: MonthStamp,
    /// Sampling interval in months (1 = monthly, 3 = quarterly).
    pub step_months: u32,
    /// `true` marks a missing observation; same length as `values`.
    pub missing: Vec<bool>,
}

impl TimeSeries {
    /// A fully observed series.
    pub fn new(values: Vec<f64>, start: MonthStamp, step_months: u32) -> Result<Self> {
        let missing = vec![false; values.len()];
        Self::with_missing(values, missing, start, step_months)
    }

    pub fn with_missing(
        values: Vec<f64>,
        missing: Vec<bool>,
        start: MonthStamp,
        step_months: u32,
    ) -> Result<Self> {
        if step_months == 0 {
            return Err(Error::InvalidData("sampling step must be positive".into()));
        }
        if values.len() != missing.len() {
            return Err(Error::InvalidData(format!(
                "values length {} != missing mask length {}",
                values.len(),
                missing.len()
            )));
        }
        if values
            .iter()
            .zip(&missing)
            .any(|(v, &m)| !m && !v.is_finite())
        {
            return Err(Error::InvalidData("non-finite value at an observed step".into()));
        }
        Ok(Self { values, start, step_months, missing })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, idx: usize) -> MonthStamp {
        self.start.add_months(idx as i64 * self.step_months as i64)
    }

    pub fn n_observed(&self) -> usize {
        self.missing.iter().filter(|&&m| !m).count()
    }

    pub fn observed_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.missing)
            .filter(|(_, &m)| !m)
            .map(|(&v, _)| v)
    }

    /// Mean over observed entries; 0 for an all-missing series.
    pub fn observed_mean(&self) -> f64 {
        let n = self.n_observed();
        if n == 0 {
            return 0.0;
        }
        self.observed_values().sum::<f64>() / n as f64
    }

    /// Population variance over observed entries.
    pub fn observed_variance(&self) -> f64 {
        let n = self.n_observed();
        if n == 0 {
            return 0.0;
        }
        let mean = self.observed_mean();
        self.observed_values().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64
    }

    /// Two series share a time base when start, step, and length agree.
    pub fn same_time_base(&self, other: &Self) -> bool {
        self.start == other.start
            && self.step_months == other.step_months
            && self.len() == other.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn month_arithmetic_wraps_years() {
        let m = MonthStamp::new(1999, 11).unwrap();
        assert_eq!(m.add_months(3), MonthStamp::new(2000, 2).unwrap());
        assert_eq!(m.add_months(-11), MonthStamp::new(1998, 12).unwrap());
        assert_eq!(m.add_months(14).months_since(m), 14);
    }

    #[test]
    fn month_parse_roundtrip() {
        let m: MonthStamp = "1947-03".parse().unwrap();
        assert_eq!(m, MonthStamp::new(1947, 3).unwrap());
        assert_eq!(m.to_string(), "1947-03");
        assert!("1947-13".parse::<MonthStamp>().is_err());
        assert!("194703".parse::<MonthStamp>().is_err());
    }

    #[test]
    fn series_validation() {
        let start = MonthStamp::new(1900, 1).unwrap();
        assert!(TimeSeries::new(vec![1.0, 2.0], start, 0).is_err());
        assert!(TimeSeries::with_missing(vec![1.0], vec![false, false], start, 1).is_err());
        assert!(TimeSeries::with_missing(vec![f64::NAN], vec![true], start, 1).is_ok());
        assert!(TimeSeries::with_missing(vec![f64::NAN], vec![false], start, 1).is_err());
    }

    #[test]
    fn observed_stats_skip_missing() {
        let start = MonthStamp::new(1900, 1).unwrap();
        let ts =
            TimeSeries::with_missing(vec![1.0, f64::NAN, 3.0], vec![false, true, false], start, 1)
                .unwrap();
        assert_eq!(ts.n_observed(), 2);
        assert_eq!(ts.observed_mean(), 2.0);
        assert_eq!(ts.observed_variance(), 1.0);
        assert_eq!(ts.time_at(2), MonthStamp::new(1900, 3).unwrap());
    }
}
