//! Time-series decomposition via linear Gaussian state-space models,
//! Markov-switching autoregressions, subspace identification of common
//! factors across panels, and spectral utilities.

pub mod error;
pub mod optim;
pub mod ssm;
pub mod structural;
pub mod timeseries;

pub use error::{Error, Result};
pub use timeseries::{MonthStamp, TimeSeries};
