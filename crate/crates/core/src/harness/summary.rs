use serde::{Deserialize, Serialize};

use super::run::EpochRecord;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub rmse_east: f64,
    pub rmse_north: f64,
    pub rmse_up: f64,
    pub rmse_3d: f64,
    pub max_error_3d: f64,
    pub epochs_total: usize,
    pub epochs_predict_only: usize,
    pub epochs_updated: usize,
    pub detections: usize,
    pub exclusions: usize,
    /// Detections at epochs with no scheduled fault active.
    pub false_alarms: usize,
    pub seed: u64,
    pub config_digest: String,
    pub tool_version: String,
    pub filter: String,
    pub tracking_mode: String,
    pub channel_model: String,
}

/// Error statistics over `records`; `None` when empty. Run metadata fields
/// are left blank for the caller.
pub fn compute_summary(records: &[EpochRecord]) -> Option<RunSummary> {
    if records.is_empty() {
        return None;
    }
    let n = records.len() as f64;
    let mean_sq = |f: fn(&EpochRecord) -> f64| records.iter().map(|r| f(r).powi(2)).sum::<f64>() / n;
    let (se, sn, su) = (
        mean_sq(|r| r.error_enu.east),
        mean_sq(|r| r.error_enu.north),
        mean_sq(|r| r.error_enu.up),
    );
    let predict_only = records.iter().filter(|r| r.flags.predict_only).count();
    Some(RunSummary {
        rmse_east: se.sqrt(),
        rmse_north: sn.sqrt(),
        rmse_up: su.sqrt(),
        rmse_3d: (se + sn + su).sqrt(),
        max_error_3d: records.iter().map(EpochRecord::error_3d).fold(0.0, f64::max),
        epochs_total: records.len(),
        epochs_predict_only: predict_only,
        epochs_updated: records.len() - predict_only,
        detections: records.iter().filter(|r| r.raim_detected).count(),
        exclusions: records.iter().map(|r| r.excluded.len()).sum(),
        false_alarms: records.iter().filter(|r| r.raim_detected && !r.flags.fault).count(),
        seed: 0,
        config_digest: String::new(),
        tool_version: TOOL_VERSION.to_string(),
        filter: String::new(),
        tracking_mode: String::new(),
        channel_model: String::new(),
    })
}
