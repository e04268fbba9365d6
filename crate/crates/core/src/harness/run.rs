use std::collections::BTreeMap;

use thiserror::Error;

use crate::channel::{apply_condition, step_link, ChannelRealization};
use crate::estimation::{measurement_model, NavFilter};
use crate::frames::{ecef_to_enu, EcefVector, EnuVector, GeodeticCoord};
use crate::integrity::{gate_measurements, screen, RaimVerdict};
use crate::rng::{stream, SimRng};
use crate::scenario::{
    active_events, propagate_constellation, truth_state, visible_satellites, ConfigError, SatelliteState,
    ScenarioConfig,
};
use crate::tracking::{
    assemble_measurements, scalar_channel_step, true_pseudorange, vector_channel_step, MeasurementSet, TrackerChannel,
    TrackingError, TrackingMode,
};

use super::summary::{compute_summary, RunSummary};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("epoch {epoch}: {source}")]
    Tracking {
        epoch: usize,
        #[source]
        source: TrackingError,
    },
    #[error("epoch {epoch}: navigation state is no longer finite")]
    Diverged { epoch: usize },
    #[error("no epochs to summarize")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EpochFlags {
    pub predict_only: bool,
    pub psd_repair: bool,
    pub unresolved: bool,
    pub update_failed: bool,
    pub outage: bool,
    pub fault: bool,
}

impl EpochFlags {
    pub const TOKENS: [&'static str; 6] = [
        "predict_only",
        "psd_repair",
        "unresolved",
        "update_failed",
        "outage",
        "fault",
    ];

    pub fn tokens(&self) -> Vec<&'static str> {
        let set = [
            self.predict_only,
            self.psd_repair,
            self.unresolved,
            self.update_failed,
            self.outage,
            self.fault,
        ];
        Self::TOKENS
            .iter()
            .zip(set)
            .filter(|(_, on)| *on)
            .map(|(t, _)| *t)
            .collect()
    }

    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Result<Self, String> {
        let mut f = Self::default();
        for t in tokens {
            match t {
                "predict_only" => f.predict_only = true,
                "psd_repair" => f.psd_repair = true,
                "unresolved" => f.unresolved = true,
                "update_failed" => f.update_failed = true,
                "outage" => f.outage = true,
                "fault" => f.fault = true,
                other => return Err(format!("unknown flag token '{other}'")),
            }
        }
        Ok(f)
    }
}

/// Per-satellite state at one epoch. Not part of the CSV contract.
#[derive(Debug, Clone, PartialEq)]
pub struct SvDiagnostic {
    pub sv_id: u32,
    pub valid: bool,
    pub locked: bool,
    /// True minus tracked pseudorange, meters.
    pub code_error: f64,
    /// Residual handed to the filter (zero when invalid) and its variance.
    pub residual: f64,
    pub variance: f64,
    pub cn0_dbhz: f64,
    pub reacquiring: bool,
    pub outaged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub t: f64,
    pub truth: EcefVector,
    pub estimate: EcefVector,
    pub error_enu: EnuVector,
    pub valid_svs: usize,
    pub locked_svs: usize,
    pub raim_statistic: f64,
    pub raim_threshold: f64,
    pub raim_detected: bool,
    pub excluded: Vec<u32>,
    pub flags: EpochFlags,
    pub nis: Option<f64>,
    /// Measurement dimension behind `nis`.
    pub nis_dims: usize,
    pub svs: Vec<SvDiagnostic>,
}

impl EpochRecord {
    pub fn error_3d(&self) -> f64 {
        self.error_enu.norm()
    }

    pub fn sv(&self, sv_id: u32) -> Option<&SvDiagnostic> {
        self.svs.iter().find(|s| s.sv_id == sv_id)
    }
}

struct SvSlot {
    rng: SimRng,
    link: ChannelRealization,
    tracker: TrackerChannel,
    /// Visible at the previous epoch.
    active: bool,
}

/// Runs the closed loop. Epoch k is at t = k dt for k < floor(duration/dt).
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(Vec<EpochRecord>, RunSummary), RunError> {
    cfg.validate()?;
    let records = simulate(cfg)?;
    let mut summary = compute_summary(&records).ok_or(RunError::Empty)?;
    summary.seed = cfg.seed;
    summary.config_digest = cfg.digest();
    summary.filter = cfg.filter.kind.as_str().to_string();
    summary.tracking_mode = cfg.tracking.mode.as_str().to_string();
    summary.channel_model = cfg.channel.model.as_str().to_string();
    Ok((records, summary))
}

fn simulate(cfg: &ScenarioConfig) -> Result<Vec<EpochRecord>, RunError> {
    let n = cfg.epoch_count();
    let dt = cfg.dt_s;
    let reference: GeodeticCoord = cfg.trajectory.reference();
    let mask = cfg.constellation.elevation_mask();

    let truth0 = truth_state(&cfg.trajectory, 0.0);
    let mut filter = NavFilter::new(cfg.filter.clone(), &truth0, &mut stream(cfg.seed, 0));
    let mut slots: BTreeMap<u32, SvSlot> = BTreeMap::new();
    let mut records = Vec::with_capacity(n);

    for k in 0..n {
        let t = k as f64 * dt;
        let truth = truth_state(&cfg.trajectory, t);
        let all = propagate_constellation(&cfg.constellation, t);
        let visible_ids = visible_satellites(&all, &truth.position, &reference, mask);
        let visible: Vec<SatelliteState> = visible_ids.iter().map(|id| all[(*id - 1) as usize].clone()).collect();
        let events = active_events(&cfg.events, t);

        for slot in slots.values_mut() {
            slot.active = slot.active && visible_ids.binary_search(&slot.tracker.sv_id).is_ok();
        }
        for sv in &visible {
            let outaged = events.outaged.contains(&sv.sv_id);
            match slots.get_mut(&sv.sv_id) {
                Some(slot) if slot.active => step_link(&mut slot.link, &cfg.channel, dt, outaged, &mut slot.rng),
                Some(slot) => {
                    // rising again: fresh link draw and a cold tracker
                    slot.link = ChannelRealization::new(sv.sv_id, &cfg.channel, &mut slot.rng);
                    apply_condition(&mut slot.link, outaged);
                    slot.tracker = TrackerChannel::new(sv.sv_id, cfg.tracking.mode);
                    slot.active = true;
                }
                None => {
                    let mut rng = stream(cfg.seed, sv.sv_id);
                    let mut link = ChannelRealization::new(sv.sv_id, &cfg.channel, &mut rng);
                    apply_condition(&mut link, outaged);
                    slots.insert(
                        sv.sv_id,
                        SvSlot {
                            rng,
                            link,
                            tracker: TrackerChannel::new(sv.sv_id, cfg.tracking.mode),
                            active: true,
                        },
                    );
                }
            }
        }

        if k > 0 {
            filter.predict(dt);
        }
        let predicted = filter.predicted_ranges(&visible);

        let mut entries = Vec::with_capacity(visible.len());
        let mut diagnostics = Vec::with_capacity(visible.len());
        for (i, sv) in visible.iter().enumerate() {
            let slot = slots.get_mut(&sv.sv_id).expect("slot exists for visible sv");
            let rho = true_pseudorange(&truth, sv, &slot.link, events.fault_bias(sv.sv_id));
            let entry = match cfg.tracking.mode {
                TrackingMode::Vector => vector_channel_step(
                    &mut slot.tracker,
                    rho,
                    predicted[i],
                    &slot.link,
                    &cfg.channel,
                    &cfg.tracking,
                    &mut slot.rng,
                ),
                TrackingMode::Scalar => scalar_channel_step(
                    &mut slot.tracker,
                    rho,
                    predicted[i],
                    &slot.link,
                    &cfg.channel,
                    &cfg.tracking,
                    dt,
                    &mut slot.rng,
                ),
            };
            diagnostics.push(SvDiagnostic {
                sv_id: sv.sv_id,
                valid: entry.valid,
                locked: slot.tracker.locked,
                code_error: entry.code_error,
                residual: entry.residual,
                variance: entry.variance,
                cn0_dbhz: slot.link.cn0_instant,
                reacquiring: slot.tracker.reacquiring(),
                outaged: events.outaged.contains(&sv.sv_id),
            });
            entries.push(entry);
        }
        let set = assemble_measurements(t, entries).map_err(|source| RunError::Tracking { epoch: k, source })?;

        let verdict = integrity_check(&set, &filter, &visible, cfg);
        let gated = gate_measurements(&set, &verdict);
        let outcome = filter.update(&gated, &visible);

        let estimate = filter.state();
        if !filter.x.iter().all(|v| v.is_finite()) {
            return Err(RunError::Diverged { epoch: k });
        }
        let error_enu = ecef_to_enu(&estimate.position, &reference) - ecef_to_enu(&truth.position, &reference);
        records.push(EpochRecord {
            t,
            truth: truth.position,
            estimate: estimate.position,
            error_enu,
            valid_svs: gated.valid_count(),
            locked_svs: diagnostics.iter().filter(|d| d.locked).count(),
            raim_statistic: verdict.statistic,
            raim_threshold: verdict.threshold,
            raim_detected: verdict.detected,
            excluded: verdict.excluded.clone(),
            flags: EpochFlags {
                predict_only: !outcome.applied,
                psd_repair: outcome.psd_repair,
                unresolved: verdict.detected && verdict.unresolved,
                update_failed: outcome.failed.is_some(),
                outage: !events.outaged.is_empty(),
                fault: !events.faults.is_empty(),
            },
            nis: outcome.nis,
            nis_dims: if outcome.applied { outcome.dims } else { 0 },
            svs: diagnostics,
        });
    }
    Ok(records)
}

fn integrity_check(
    set: &MeasurementSet,
    filter: &NavFilter,
    visible: &[SatelliteState],
    cfg: &ScenarioConfig,
) -> RaimVerdict {
    if !cfg.integrity.raim {
        return RaimVerdict::unavailable();
    }
    let mut sats = Vec::new();
    let mut variances = Vec::new();
    for e in set.valid() {
        if let Some(s) = visible.iter().find(|s| s.sv_id == e.sv_id) {
            sats.push(s.clone());
            variances.push(e.variance);
        }
    }
    match measurement_model(&filter.x, &sats, &variances) {
        Ok(mm) => screen(set, &mm, &cfg.integrity),
        Err(_) => RaimVerdict::unavailable(),
    }
}
