//! Code tracking at the discriminator level.
//!
//! Correlators are not simulated. A discriminator reading is the true code
//! misalignment plus Gaussian thermal noise whose standard deviation follows
//! the early-minus-late DLL approximation, valid inside a pull-in region of
//! `pull_in_chips`. In vector mode every channel is steered by the
//! navigation filter's predicted pseudorange; the scalar mode is a
//! first-order DLL per channel kept as a baseline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelParams, ChannelRealization};
use crate::estimation::NavState;
use crate::rng::{normal, SimRng};
use crate::scenario::config::{invalid, ConfigError};
use crate::scenario::SatelliteState;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const CA_CHIP_RATE_HZ: f64 = 1.023e6;

/// Length of one C/A chip, about 293.05 m.
pub fn chip_length_m() -> f64 {
    SPEED_OF_LIGHT / CA_CHIP_RATE_HZ
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackingMode {
    Vector,
    Scalar,
}

impl TrackingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrackingMode::Vector => "vector",
            TrackingMode::Scalar => "scalar",
        }
    }
}

impl std::str::FromStr for TrackingMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "vector" => Ok(TrackingMode::Vector),
            "scalar" => Ok(TrackingMode::Scalar),
            other => Err(format!("unknown tracking mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackingConfig {
    pub mode: TrackingMode,
    pub correlator_spacing_chips: f64,
    pub coherent_integration_s: f64,
    pub loop_bandwidth_hz: f64,
    pub reacq_delay_s: f64,
    pub pull_in_chips: f64,
    /// Disable to get noiseless discriminator readings.
    pub thermal_noise: bool,
    /// Scalar mode: propagate the code estimate with the true range change
    /// while the link is up. Off gives the plain first-order loop, which lags
    /// a range rate v by about v / (4 B_L).
    pub carrier_aiding: bool,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            mode: TrackingMode::Vector,
            correlator_spacing_chips: 0.5,
            coherent_integration_s: 0.02,
            loop_bandwidth_hz: 1.0,
            reacq_delay_s: 2.0,
            pull_in_chips: 1.0,
            thermal_noise: true,
            carrier_aiding: false,
        }
    }
}

impl TrackingConfig {
    pub fn validate(&self, dt: f64) -> Result<(), ConfigError> {
        for (field, v) in [
            ("tracking.correlator_spacing_chips", self.correlator_spacing_chips),
            ("tracking.coherent_integration_s", self.coherent_integration_s),
            ("tracking.loop_bandwidth_hz", self.loop_bandwidth_hz),
            ("tracking.pull_in_chips", self.pull_in_chips),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(field, "must be > 0"));
            }
        }
        if !(self.reacq_delay_s >= 0.0) {
            return Err(invalid("tracking.reacq_delay_s", "must be >= 0"));
        }
        let gain = self.loop_gain(dt);
        if !(gain < 2.0) {
            return Err(invalid(
                "tracking.loop_bandwidth_hz",
                "scalar loop gain 4*B_L*dt must be < 2 for stability",
            ));
        }
        Ok(())
    }

    pub fn pull_in_m(&self) -> f64 {
        self.pull_in_chips * chip_length_m()
    }

    /// First-order loop gain g = 4 B_L dt.
    pub fn loop_gain(&self, dt: f64) -> f64 {
        4.0 * self.loop_bandwidth_hz * dt
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackingError {
    #[error("duplicate measurement for sv {0}")]
    DuplicateSv(u32),
}

/// Pseudorange the receiver would observe: geometric range plus clock bias,
/// multipath and any injected fault. Clock bias is carried in meters.
pub fn true_pseudorange(truth: &NavState, sv: &SatelliteState, chan: &ChannelRealization, fault_bias: f64) -> f64 {
    (sv.position - truth.position).norm() + truth.clock_bias + chan.multipath_bias + fault_bias
}

/// DLL thermal-noise standard deviation in meters at the given C/N0.
pub fn discriminator_noise_sigma(cn0_dbhz: f64, cfg: &TrackingConfig) -> f64 {
    let cn0 = 10f64.powf(cn0_dbhz / 10.0);
    chip_length_m() * (cfg.correlator_spacing_chips / (4.0 * cfg.coherent_integration_s * cn0)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarLoopState {
    Tracking,
    /// Link unusable; estimate frozen.
    Coasting,
    Reacquiring {
        remaining_s: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerChannel {
    pub sv_id: u32,
    pub mode: TrackingMode,
    /// Scalar mode only.
    pub code_phase_estimate: Option<f64>,
    pub locked: bool,
    pub cn0_estimate: f64,
    pub reacquisition_timer: f64,
    pub loop_state: ScalarLoopState,
    /// Scalar mode: true pseudorange at the previous epoch, the carrier-aiding
    /// reference while the carrier stays locked.
    pub carrier_reference: Option<f64>,
}

impl TrackerChannel {
    pub fn new(sv_id: u32, mode: TrackingMode) -> Self {
        Self {
            sv_id,
            mode,
            code_phase_estimate: None,
            locked: false,
            cn0_estimate: f64::NEG_INFINITY,
            reacquisition_timer: 0.0,
            loop_state: ScalarLoopState::Tracking,
            carrier_reference: None,
        }
    }

    pub fn reacquiring(&self) -> bool {
        matches!(self.loop_state, ScalarLoopState::Reacquiring { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEntry {
    pub sv_id: u32,
    /// Observed minus filter-predicted pseudorange, meters.
    pub residual: f64,
    /// m^2; positive for valid entries.
    pub variance: f64,
    pub valid: bool,
    pub predicted_pseudorange: f64,
    /// True pseudorange minus the pseudorange the channel is aligned to.
    pub code_error: f64,
}

impl MeasurementEntry {
    fn invalid(sv_id: u32, predicted: f64, code_error: f64) -> Self {
        Self {
            sv_id,
            residual: 0.0,
            variance: 0.0,
            valid: false,
            predicted_pseudorange: predicted,
            code_error,
        }
    }
}

fn measurement_variance(sigma: f64, channel: &ChannelParams) -> f64 {
    sigma * sigma + channel.multipath_sigma_m * channel.multipath_sigma_m
}

/// One vector-loop channel update. Consumes exactly one normal draw.
pub fn vector_channel_step(
    chan: &mut TrackerChannel,
    true_rho: f64,
    predicted_rho: f64,
    link: &ChannelRealization,
    channel: &ChannelParams,
    cfg: &TrackingConfig,
    rng: &mut SimRng,
) -> MeasurementEntry {
    let n = normal(rng);
    chan.cn0_estimate = link.cn0_instant;
    let code_error = true_rho - predicted_rho;
    if !link.usable(channel) || code_error.abs() > cfg.pull_in_m() {
        chan.locked = false;
        return MeasurementEntry::invalid(chan.sv_id, predicted_rho, code_error);
    }
    let sigma = discriminator_noise_sigma(link.cn0_instant, cfg);
    let noise = if cfg.thermal_noise { sigma * n } else { 0.0 };
    chan.locked = true;
    MeasurementEntry {
        sv_id: chan.sv_id,
        residual: code_error + noise,
        variance: measurement_variance(sigma, channel),
        valid: true,
        predicted_pseudorange: predicted_rho,
        code_error,
    }
}

/// One scalar DLL update. The pseudorange handed to the navigation filter is
/// the loop's own code-phase estimate. A blocked or faded link freezes the
/// estimate. With `carrier_aiding` the estimate is also propagated by the true
/// range change since the previous epoch while the link stays up, so the
/// loop only has to remove noise. Consumes exactly one normal draw.
#[allow(clippy::too_many_arguments)]
pub fn scalar_channel_step(
    chan: &mut TrackerChannel,
    true_rho: f64,
    predicted_rho: f64,
    link: &ChannelRealization,
    channel: &ChannelParams,
    cfg: &TrackingConfig,
    dt: f64,
    rng: &mut SimRng,
) -> MeasurementEntry {
    let n = normal(rng);
    chan.cn0_estimate = link.cn0_instant;
    let usable = link.usable(channel);
    let sigma = discriminator_noise_sigma(link.cn0_instant, cfg);
    let noise = if cfg.thermal_noise && sigma.is_finite() {
        sigma * n
    } else {
        0.0
    };

    let carrier_step = match (chan.loop_state, chan.carrier_reference) {
        (ScalarLoopState::Tracking, Some(prev)) if usable && cfg.carrier_aiding => true_rho - prev,
        _ => 0.0,
    };
    chan.carrier_reference = if usable { Some(true_rho) } else { None };

    let acquired = |chan: &mut TrackerChannel| {
        let estimate = true_rho + noise;
        chan.code_phase_estimate = Some(estimate);
        chan.loop_state = ScalarLoopState::Tracking;
        chan.reacquisition_timer = 0.0;
        chan.locked = true;
        MeasurementEntry {
            sv_id: chan.sv_id,
            residual: estimate - predicted_rho,
            variance: measurement_variance(sigma, channel),
            valid: true,
            predicted_pseudorange: predicted_rho,
            code_error: true_rho - estimate,
        }
    };

    let Some(estimate) = chan.code_phase_estimate else {
        // first sighting: assume a successful acquisition when the link allows it
        if usable {
            return acquired(chan);
        }
        chan.locked = false;
        return MeasurementEntry::invalid(chan.sv_id, predicted_rho, f64::NAN);
    };

    match chan.loop_state {
        ScalarLoopState::Reacquiring { remaining_s } => {
            let remaining = (remaining_s - dt).max(0.0);
            chan.reacquisition_timer = remaining;
            if remaining > 1e-9 || !usable {
                chan.loop_state = ScalarLoopState::Reacquiring { remaining_s: remaining };
                chan.locked = false;
                return MeasurementEntry::invalid(chan.sv_id, predicted_rho, true_rho - estimate);
            }
            acquired(chan)
        }
        ScalarLoopState::Tracking | ScalarLoopState::Coasting => {
            let estimate = estimate + carrier_step;
            chan.code_phase_estimate = Some(estimate);
            let error = true_rho - estimate;
            if !usable {
                chan.loop_state = ScalarLoopState::Coasting;
                chan.locked = false;
                return MeasurementEntry::invalid(chan.sv_id, predicted_rho, error);
            }
            if error.abs() > cfg.pull_in_m() {
                chan.loop_state = ScalarLoopState::Reacquiring {
                    remaining_s: cfg.reacq_delay_s,
                };
                chan.reacquisition_timer = cfg.reacq_delay_s;
                chan.locked = false;
                return MeasurementEntry::invalid(chan.sv_id, predicted_rho, error);
            }
            let updated = estimate + cfg.loop_gain(dt) * (error + noise);
            chan.code_phase_estimate = Some(updated);
            chan.loop_state = ScalarLoopState::Tracking;
            chan.locked = true;
            MeasurementEntry {
                sv_id: chan.sv_id,
                residual: updated - predicted_rho,
                variance: measurement_variance(sigma, channel),
                valid: true,
                predicted_pseudorange: predicted_rho,
                code_error: true_rho - updated,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementSet {
    pub t: f64,
    /// Sorted by `sv_id`; invalid entries are kept for logging.
    pub entries: Vec<MeasurementEntry>,
}

impl MeasurementSet {
    pub fn valid(&self) -> impl Iterator<Item = &MeasurementEntry> {
        self.entries.iter().filter(|e| e.valid)
    }

    pub fn valid_count(&self) -> usize {
        self.valid().count()
    }

    /// Marks the listed satellites invalid.
    pub fn without(&self, excluded: &[u32]) -> MeasurementSet {
        let mut out = self.clone();
        for e in out.entries.iter_mut().filter(|e| excluded.contains(&e.sv_id)) {
            e.valid = false;
        }
        out
    }
}

pub fn assemble_measurements(t: f64, mut entries: Vec<MeasurementEntry>) -> Result<MeasurementSet, TrackingError> {
    entries.sort_by_key(|e| e.sv_id);
    if let Some(w) = entries.windows(2).find(|w| w[0].sv_id == w[1].sv_id) {
        return Err(TrackingError::DuplicateSv(w[0].sv_id));
    }
    Ok(MeasurementSet { t, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_condition, FadingModel};
    use crate::rng::stream;
    use nalgebra::Vector3;

    fn link(params: &ChannelParams) -> ChannelRealization {
        ChannelRealization::new(1, params, &mut stream(0, 1))
    }

    fn clean() -> ChannelParams {
        ChannelParams {
            model: FadingModel::None,
            ..ChannelParams::default()
        }
    }

    #[test]
    fn chip_length() {
        assert!((chip_length_m() - 293.052_2).abs() < 1e-3);
    }

    #[test]
    fn pseudorange_composition() {
        let truth = NavState::at_rest(Vector3::zeros());
        let sv = SatelliteState {
            sv_id: 1,
            position: Vector3::new(26_560_000.0, 0.0, 0.0),
            velocity: Vector3::zeros(),
        };
        let p = clean();
        let l = link(&p);
        assert_eq!(true_pseudorange(&truth, &sv, &l, 0.0), 26_560_000.0);
        let clocked = NavState {
            clock_bias: 1e-6 * SPEED_OF_LIGHT,
            ..truth
        };
        assert!((true_pseudorange(&clocked, &sv, &l, 0.0) - 26_560_299.792_458).abs() < 1e-6);
        assert_eq!(true_pseudorange(&truth, &sv, &l, 200.0), 26_560_200.0);
    }

    #[test]
    fn noise_sigma_values() {
        let cfg = TrackingConfig::default();
        // lambda * sqrt(d / (4 T C/N0)) evaluated by hand at 45 dB-Hz
        let expected = 293.052_2 * (0.5f64 / (4.0 * 0.02 * 31_622.776_6)).sqrt();
        let s45 = discriminator_noise_sigma(45.0, &cfg);
        assert!((s45 - expected).abs() < 1e-3);
        assert!((s45 - 4.12).abs() < 0.01);
        let s51 = discriminator_noise_sigma(45.0 + 20.0 * 2f64.log10(), &cfg);
        assert!((s51 / s45 - 0.5).abs() < 0.01);
        let mut prev = f64::INFINITY;
        for c in (20..60).map(f64::from) {
            let s = discriminator_noise_sigma(c, &cfg);
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn vector_blocked_is_invalid() {
        let p = clean();
        let mut l = link(&p);
        apply_condition(&mut l, true);
        let mut ch = TrackerChannel::new(1, TrackingMode::Vector);
        let e = vector_channel_step(
            &mut ch,
            100.0,
            100.0,
            &l,
            &p,
            &TrackingConfig::default(),
            &mut stream(1, 1),
        );
        assert!(!e.valid);
        assert!(!ch.locked);
    }

    #[test]
    fn vector_out_of_pull_in() {
        let p = clean();
        let l = link(&p);
        let mut ch = TrackerChannel::new(1, TrackingMode::Vector);
        let e = vector_channel_step(
            &mut ch,
            1400.0,
            1000.0,
            &l,
            &p,
            &TrackingConfig::default(),
            &mut stream(1, 1),
        );
        assert!(!e.valid);
        assert_eq!(e.code_error, 400.0);
        let e = vector_channel_step(
            &mut ch,
            1200.0,
            1000.0,
            &l,
            &p,
            &TrackingConfig::default(),
            &mut stream(1, 1),
        );
        assert!(e.valid && ch.locked);
    }

    #[test]
    fn vector_noiseless_zero_residual() {
        let p = clean();
        let l = link(&p);
        let cfg = TrackingConfig {
            thermal_noise: false,
            ..TrackingConfig::default()
        };
        let mut ch = TrackerChannel::new(1, TrackingMode::Vector);
        let e = vector_channel_step(&mut ch, 2e7, 2e7, &l, &p, &cfg, &mut stream(1, 1));
        assert!(e.valid);
        assert_eq!(e.residual, 0.0);
        assert!(e.variance > 0.0);
    }

    #[test]
    fn vector_low_cn0_unlocks() {
        let p = ChannelParams {
            model: FadingModel::Rayleigh,
            ..ChannelParams::default()
        };
        let mut l = link(&p);
        l.envelope = 0.01;
        l.cn0_instant = crate::channel::cn0_instant(p.cn0_nominal_dbhz, 0.01);
        let mut ch = TrackerChannel::new(1, TrackingMode::Vector);
        let e = vector_channel_step(&mut ch, 0.0, 0.0, &l, &p, &TrackingConfig::default(), &mut stream(1, 1));
        assert!(!e.valid);
    }

    #[test]
    fn scalar_tracks_with_bounded_error() {
        let p = clean();
        let l = link(&p);
        let cfg = TrackingConfig::default();
        let mut ch = TrackerChannel::new(1, TrackingMode::Scalar);
        let mut rng = stream(2, 1);
        for k in 0..2000 {
            let rho = 2.2e7 + 1.0 * k as f64;
            let e = scalar_channel_step(&mut ch, rho, rho, &l, &p, &cfg, 0.1, &mut rng);
            assert!(e.valid);
            assert!(e.code_error.abs() < 20.0, "{}", e.code_error);
        }
    }

    #[test]
    fn scalar_unaided_lag_matches_first_order_theory() {
        // ramp input v: the error before an update settles at v dt / g and
        // after it at (1 - g) v dt / g
        let p = clean();
        let l = link(&p);
        let cfg = TrackingConfig {
            thermal_noise: false,
            ..TrackingConfig::default()
        };
        let mut ch = TrackerChannel::new(1, TrackingMode::Scalar);
        let mut rng = stream(5, 1);
        let v = 200.0;
        let mut last = None;
        for k in 0..300 {
            let rho = 2.2e7 + v * 0.1 * k as f64;
            last = Some(scalar_channel_step(&mut ch, rho, rho, &l, &p, &cfg, 0.1, &mut rng));
        }
        let e = last.unwrap();
        assert!(e.valid);
        let g = cfg.loop_gain(0.1);
        assert!(
            (e.code_error - (1.0 - g) * v * 0.1 / g).abs() < 1e-6,
            "{}",
            e.code_error
        );
    }

    #[test]
    fn scalar_carrier_aiding_follows_fast_geometry() {
        let p = clean();
        let l = link(&p);
        let cfg = TrackingConfig {
            carrier_aiding: true,
            ..TrackingConfig::default()
        };
        let mut ch = TrackerChannel::new(1, TrackingMode::Scalar);
        let mut rng = stream(5, 1);
        for k in 0..2000 {
            let rho = 2.2e7 - 800.0 * 0.1 * k as f64;
            let e = scalar_channel_step(&mut ch, rho, rho, &l, &p, &cfg, 0.1, &mut rng);
            assert!(e.valid);
            assert!(e.code_error.abs() < 20.0, "{}", e.code_error);
        }
    }

    #[test]
    fn scalar_outage_on_moving_geometry_reacquires() {
        // 100 m/s range rate for 20 s gives 2000 m of coasted error, far
        // beyond one chip
        assert!(100.0 * 20.0 > chip_length_m());
        let p = clean();
        let cfg = TrackingConfig {
            thermal_noise: false,
            ..TrackingConfig::default()
        };
        let mut l = link(&p);
        let mut ch = TrackerChannel::new(1, TrackingMode::Scalar);
        let mut rng = stream(3, 1);
        let dt = 0.1;
        let rho = |k: usize| 2.2e7 + 100.0 * dt * k as f64;
        let mut k = 0;
        for _ in 0..100 {
            scalar_channel_step(&mut ch, rho(k), rho(k), &l, &p, &cfg, dt, &mut rng);
            k += 1;
        }
        apply_condition(&mut l, true);
        for _ in 0..200 {
            let e = scalar_channel_step(&mut ch, rho(k), rho(k), &l, &p, &cfg, dt, &mut rng);
            assert!(!e.valid);
            k += 1;
        }
        apply_condition(&mut l, false);
        let mut invalid = 0;
        loop {
            let e = scalar_channel_step(&mut ch, rho(k), rho(k), &l, &p, &cfg, dt, &mut rng);
            k += 1;
            if e.valid {
                break;
            }
            invalid += 1;
            assert!(ch.reacquiring());
        }
        assert_eq!(invalid, 20);
        assert!(ch.locked);
    }

    #[test]
    fn scalar_static_geometry_keeps_lock_through_outage() {
        let p = clean();
        let cfg = TrackingConfig::default();
        let mut l = link(&p);
        let mut ch = TrackerChannel::new(1, TrackingMode::Scalar);
        let mut rng = stream(4, 1);
        for _ in 0..50 {
            scalar_channel_step(&mut ch, 2e7, 2e7, &l, &p, &cfg, 0.1, &mut rng);
        }
        apply_condition(&mut l, true);
        for _ in 0..200 {
            scalar_channel_step(&mut ch, 2e7, 2e7, &l, &p, &cfg, 0.1, &mut rng);
        }
        apply_condition(&mut l, false);
        let e = scalar_channel_step(&mut ch, 2e7, 2e7, &l, &p, &cfg, 0.1, &mut rng);
        assert!(e.valid);
    }

    #[test]
    fn assemble_sorts_and_rejects_duplicates() {
        let mk = |sv, valid| MeasurementEntry {
            sv_id: sv,
            residual: 0.0,
            variance: 1.0,
            valid,
            predicted_pseudorange: 0.0,
            code_error: 0.0,
        };
        let set = assemble_measurements(0.0, vec![mk(5, true), mk(2, false), mk(3, true)]).unwrap();
        assert_eq!(set.entries.iter().map(|e| e.sv_id).collect::<Vec<_>>(), vec![2, 3, 5]);
        assert_eq!(set.valid().map(|e| e.sv_id).collect::<Vec<_>>(), vec![3, 5]);
        let none = assemble_measurements(0.0, vec![mk(1, false), mk(2, false)]).unwrap();
        assert_eq!(none.valid_count(), 0);
        assert_eq!(
            assemble_measurements(0.0, vec![mk(1, true), mk(1, true)]),
            Err(TrackingError::DuplicateSv(1))
        );
    }
}
