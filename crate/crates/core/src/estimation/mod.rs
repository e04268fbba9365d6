//! Navigation state estimation.
//!
//! The state is eight-dimensional: ECEF position (m), ECEF velocity (m/s),
//! receiver clock bias (m) and clock drift (m/s). Clock terms are kept in
//! range units so the pseudorange Jacobian is unitless.
//!
//! Both filters share the linear time update. The measurement update consumes
//! *residuals*: observed minus predicted pseudorange at the prior mean, which
//! is exactly what the vector tracking channels produce.

mod ekf;
mod filter;
mod init;
mod measurement;
mod process;
mod ukf;

pub use ekf::ekf_update;
pub use filter::{NavFilter, UpdateOutcome};
pub use init::initialize_filter;
pub use measurement::{measurement_model, predict_pseudoranges, pseudorange_deviations, MeasurementModel};
pub use process::{kf_predict, make_process_model, ProcessModel};
pub use ukf::{
    sigma_points, sigma_points_with_repair, ukf_update, ukf_update_deviations, unscented_transform,
    unscented_transform_deviations, SigmaPointSet, UtResult,
};

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{EcefVector, FrameError};
use crate::scenario::config::{invalid, ConfigError};

pub const STATE_DIM: usize = 8;
pub const IDX_POS: usize = 0;
pub const IDX_VEL: usize = 3;
pub const IDX_CLOCK_BIAS: usize = 6;
pub const IDX_CLOCK_DRIFT: usize = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("innovation covariance is not invertible")]
    SingularInnovation,
    #[error("covariance is not positive definite (Cholesky failed)")]
    NotPositiveDefinite,
    #[error("measurement geometry: {0}")]
    Geometry(#[from] FrameError),
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavState {
    pub position: EcefVector,
    pub velocity: EcefVector,
    /// Meters (c times the clock offset).
    pub clock_bias: f64,
    /// Meters per second.
    pub clock_drift: f64,
}

impl NavState {
    pub fn at_rest(position: EcefVector) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
            clock_bias: 0.0,
            clock_drift: 0.0,
        }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&[
            self.position.x,
            self.position.y,
            self.position.z,
            self.velocity.x,
            self.velocity.y,
            self.velocity.z,
            self.clock_bias,
            self.clock_drift,
        ])
    }

    pub fn from_vector(x: &DVector<f64>) -> Self {
        assert_eq!(x.len(), STATE_DIM);
        Self {
            position: Vector3::new(x[0], x[1], x[2]),
            velocity: Vector3::new(x[3], x[4], x[5]),
            clock_bias: x[IDX_CLOCK_BIAS],
            clock_drift: x[IDX_CLOCK_DRIFT],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    #[default]
    Ekf,
    Ukf,
}

impl FilterKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FilterKind::Ekf => "ekf",
            FilterKind::Ukf => "ukf",
        }
    }
}

impl std::str::FromStr for FilterKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ekf" => Ok(FilterKind::Ekf),
            "ukf" => Ok(FilterKind::Ukf),
            other => Err(format!("unknown filter type '{other}'")),
        }
    }
}

/// Scaled unscented transform parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UkfParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UkfParams {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            beta: 2.0,
            kappa: 0.0,
        }
    }
}

impl UkfParams {
    /// lambda = alpha^2 (n + kappa) - n
    pub fn lambda(&self, n: usize) -> f64 {
        self.alpha * self.alpha * (n as f64 + self.kappa) - n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProcessNoise {
    /// Acceleration white-noise PSD per axis, m^2/s^3.
    pub accel_psd: f64,
    /// Clock bias PSD, m^2/s.
    pub clock_bias_psd: f64,
    /// Clock drift PSD, m^2/s^3.
    pub clock_drift_psd: f64,
}

impl Default for ProcessNoise {
    fn default() -> Self {
        Self {
            accel_psd: 1.0,
            clock_bias_psd: 0.01,
            clock_drift_psd: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    pub pos_sigma_m: f64,
    pub vel_sigma_mps: f64,
    pub clk_sigma_m: f64,
    pub drift_sigma_mps: f64,
    /// Draw the initial estimate error from these sigmas; when false the
    /// filter starts on truth but keeps the same initial covariance.
    pub perturb: bool,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            pos_sigma_m: 10.0,
            vel_sigma_mps: 1.0,
            clk_sigma_m: 100.0,
            drift_sigma_mps: 1.0,
            perturb: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    #[serde(rename = "type")]
    pub kind: FilterKind,
    pub ukf: UkfParams,
    pub process: ProcessNoise,
    pub init: InitConfig,
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = STATE_DIM as f64;
        if !(self.ukf.alpha > 0.0) || !self.ukf.beta.is_finite() || !self.ukf.kappa.is_finite() {
            return Err(invalid("filter.ukf.alpha", "must be > 0 with finite beta and kappa"));
        }
        if !(n + self.ukf.lambda(STATE_DIM) > 0.0) {
            return Err(invalid("filter.ukf.kappa", "n + lambda must be > 0"));
        }
        for (field, v) in [
            ("filter.process.accel_psd", self.process.accel_psd),
            ("filter.process.clock_bias_psd", self.process.clock_bias_psd),
            ("filter.process.clock_drift_psd", self.process.clock_drift_psd),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(field, "must be >= 0"));
            }
        }
        for (field, v) in [
            ("filter.init.pos_sigma_m", self.init.pos_sigma_m),
            ("filter.init.vel_sigma_mps", self.init.vel_sigma_mps),
            ("filter.init.clk_sigma_m", self.init.clk_sigma_m),
            ("filter.init.drift_sigma_mps", self.init.drift_sigma_mps),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(field, "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Result of a measurement update.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateResult {
    pub x: DVector<f64>,
    pub p: DMatrix<f64>,
    pub innovations: DVector<f64>,
    /// Normalized innovation squared, y' S^-1 y.
    pub nis: f64,
    /// Diagonal jitter was needed before sigma points could be formed.
    pub psd_repaired: bool,
}

pub(crate) fn symmetrize(p: &DMatrix<f64>) -> DMatrix<f64> {
    (p + p.transpose()) * 0.5
}

/// Symmetric to 1e-9 relative with no eigenvalue below -1e-9 * trace.
pub fn covariance_is_healthy(p: &DMatrix<f64>) -> bool {
    let scale = p.norm().max(f64::MIN_POSITIVE);
    if (p - p.transpose()).norm() > 1e-9 * scale {
        return false;
    }
    let eig = symmetrize(p).symmetric_eigenvalues();
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    min >= -1e-9 * p.trace().abs()
}
