//! Snapshot RAIM and fault detection and exclusion.
//!
//! The test statistic is the weighted sum of squared least-squares residuals
//! of the epoch's pseudorange residual vector against the position and clock
//! columns of the measurement Jacobian. Under the fault-free hypothesis it is
//! chi-square with m - 4 degrees of freedom. Exclusion assumes a single fault
//! and re-tests every leave-one-out subset.

mod chi2;
mod raim;

pub use chi2::{chi_square_cdf, chi_square_quantile, ln_gamma, regularized_gamma_p};
pub use raim::{fde_exclude, gate_measurements, ls_residual_statistic, raim_detect, residual_statistic, screen};

use serde::{Deserialize, Serialize};

use crate::scenario::config::{invalid, ConfigError};

/// Fewest valid satellites for detection.
pub const MIN_SVS_DETECT: usize = 5;
/// Fewest valid satellites for exclusion.
pub const MIN_SVS_EXCLUDE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrityConfig {
    pub raim: bool,
    pub fde: bool,
    /// Per-test false-alarm probability.
    pub pfa: f64,
}

impl Default for IntegrityConfig {
    fn default() -> Self {
        Self {
            raim: false,
            fde: false,
            pfa: 0.01,
        }
    }
}

impl IntegrityConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err(invalid("integrity.pfa", "must satisfy 0 < pfa < 1"));
        }
        if self.fde && !self.raim {
            return Err(invalid("integrity.fde", "fde requires raim"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Capability {
    Unavailable,
    DetectOnly,
    DetectAndExclude,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaimVerdict {
    /// NaN when unavailable.
    pub statistic: f64,
    pub threshold: f64,
    pub degrees_of_freedom: usize,
    pub detected: bool,
    pub excluded: Vec<u32>,
    pub capability: Capability,
    /// A detection that could not be resolved by exclusion; the epoch's
    /// measurements are all withheld from the filter.
    pub unresolved: bool,
}

impl RaimVerdict {
    pub fn unavailable() -> Self {
        Self {
            statistic: f64::NAN,
            threshold: f64::NAN,
            degrees_of_freedom: 0,
            detected: false,
            excluded: Vec::new(),
            capability: Capability::Unavailable,
            unresolved: false,
        }
    }
}
