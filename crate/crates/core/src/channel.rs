//! Land-mobile-satellite link model.
//!
//! Each satellite link carries a complex scattered component evolving as a
//! first-order autoregressive Gaussian process, a fixed line-of-sight mean set
//! by the Rician K-factor, a Gauss-Markov multipath range bias, and a
//! LOS/blocked condition driven by the outage schedule. The unit mean-power
//! normalization E[envelope^2] = 1 holds for every K.

use serde::{Deserialize, Serialize};

use crate::rng::{normal, SimRng};
use crate::scenario::config::{invalid, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingModel {
    None,
    Rayleigh,
    Rician,
}

impl FadingModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            FadingModel::None => "none",
            FadingModel::Rayleigh => "rayleigh",
            FadingModel::Rician => "rician",
        }
    }
}

impl std::str::FromStr for FadingModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(FadingModel::None),
            "rayleigh" => Ok(FadingModel::Rayleigh),
            "rician" => Ok(FadingModel::Rician),
            other => Err(format!("unknown channel model '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub model: FadingModel,
    /// LOS-to-scattered power ratio, dB. Only read for the Rician model.
    pub k_db: f64,
    pub fade_tau_s: f64,
    pub multipath_sigma_m: f64,
    pub multipath_tau_s: f64,
    pub cn0_nominal_dbhz: f64,
    pub lock_threshold_dbhz: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            model: FadingModel::None,
            k_db: 10.0,
            fade_tau_s: 1.0,
            multipath_sigma_m: 0.0,
            multipath_tau_s: 2.0,
            cn0_nominal_dbhz: 45.0,
            lock_threshold_dbhz: 28.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.fade_tau_s > 0.0) {
            return Err(invalid("channel.fade_tau_s", "must be > 0"));
        }
        if !(self.multipath_tau_s > 0.0) {
            return Err(invalid("channel.multipath_tau_s", "must be > 0"));
        }
        if !(self.multipath_sigma_m >= 0.0) {
            return Err(invalid("channel.multipath_sigma_m", "must be >= 0"));
        }
        if !self.k_db.is_finite() {
            return Err(invalid("channel.k_db", "must be finite"));
        }
        if !self.cn0_nominal_dbhz.is_finite() {
            return Err(invalid("channel.cn0_nominal_dbhz", "must be finite"));
        }
        if !(self.lock_threshold_dbhz < self.cn0_nominal_dbhz) {
            return Err(invalid("channel.lock_threshold_dbhz", "must be below cn0_nominal_dbhz"));
        }
        Ok(())
    }

    /// Linear K-factor; zero for Rayleigh and for the no-fading model.
    pub fn k_linear(&self) -> f64 {
        match self.model {
            FadingModel::Rician => 10f64.powf(self.k_db / 10.0),
            _ => 0.0,
        }
    }

    /// Line-of-sight amplitude sqrt(K/(K+1)).
    pub fn los_amplitude(&self) -> f64 {
        let k = self.k_linear();
        (k / (k + 1.0)).sqrt()
    }

    /// Per-component standard deviation of the scattered field, with total
    /// scattered power 2 sigma^2 = 1/(K+1).
    pub fn scatter_sigma(&self) -> f64 {
        let k = self.k_linear();
        (0.5 / (k + 1.0)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkCondition {
    Los,
    Blocked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub sv_id: u32,
    pub condition: LinkCondition,
    pub inphase: f64,
    pub quadrature: f64,
    pub envelope: f64,
    pub multipath_bias: f64,
    pub cn0_instant: f64,
}

impl ChannelRealization {
    /// Draws the initial link state from the stationary distributions.
    pub fn new(sv_id: u32, params: &ChannelParams, rng: &mut SimRng) -> Self {
        let sigma = params.scatter_sigma();
        let inphase = sigma * normal(rng);
        let quadrature = sigma * normal(rng);
        let multipath_bias = params.multipath_sigma_m * normal(rng);
        let mut r = Self {
            sv_id,
            condition: LinkCondition::Los,
            inphase,
            quadrature,
            envelope: 1.0,
            multipath_bias,
            cn0_instant: params.cn0_nominal_dbhz,
        };
        r.refresh(params);
        r
    }

    fn refresh(&mut self, params: &ChannelParams) {
        self.envelope = match params.model {
            FadingModel::None => 1.0,
            _ => (params.los_amplitude() + self.inphase).hypot(self.quadrature),
        };
        self.cn0_instant = cn0_instant(params.cn0_nominal_dbhz, self.envelope);
    }

    /// Link usable for tracking: line of sight and above the lock threshold.
    pub fn usable(&self, params: &ChannelParams) -> bool {
        self.condition == LinkCondition::Los && self.cn0_instant >= params.lock_threshold_dbhz
    }
}

/// Advances the scattered component by `dt` and returns the new envelope.
///
/// Always consumes two normal draws so the stream position does not depend on
/// the fading model.
pub fn step_envelope(state: &mut ChannelRealization, params: &ChannelParams, dt: f64, rng: &mut SimRng) -> f64 {
    let rho = (-dt / params.fade_tau_s).exp();
    let drive = (1.0 - rho * rho).sqrt() * params.scatter_sigma();
    let ni = normal(rng);
    let nq = normal(rng);
    state.inphase = rho * state.inphase + drive * ni;
    state.quadrature = rho * state.quadrature + drive * nq;
    state.refresh(params);
    state.envelope
}

/// Instantaneous C/N0 in dB-Hz. A zero envelope maps to negative infinity,
/// which every lock threshold rejects.
pub fn cn0_instant(cn0_nominal: f64, envelope: f64) -> f64 {
    if envelope <= 0.0 {
        f64::NEG_INFINITY
    } else {
        cn0_nominal + 20.0 * envelope.log10()
    }
}

/// First-order Gauss-Markov update of the multipath range bias (meters).
pub fn step_multipath_bias(state: &mut ChannelRealization, params: &ChannelParams, dt: f64, rng: &mut SimRng) -> f64 {
    let rho = (-dt / params.multipath_tau_s).exp();
    let n = normal(rng);
    state.multipath_bias = rho * state.multipath_bias + (1.0 - rho * rho).sqrt() * params.multipath_sigma_m * n;
    state.multipath_bias
}

/// Applies the outage schedule. Fading and multipath keep evolving underneath
/// a blocked link.
pub fn apply_condition(state: &mut ChannelRealization, outaged: bool) {
    state.condition = if outaged {
        LinkCondition::Blocked
    } else {
        LinkCondition::Los
    };
}

/// One full per-epoch link update in the documented draw order: envelope,
/// then multipath.
pub fn step_link(state: &mut ChannelRealization, params: &ChannelParams, dt: f64, outaged: bool, rng: &mut SimRng) {
    step_envelope(state, params, dt, rng);
    step_multipath_bias(state, params, dt, rng);
    apply_condition(state, outaged);
}
