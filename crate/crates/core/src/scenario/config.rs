//! Scenario document: JSON schema, defaults and validation.
//!
//! Angles are degrees, distances meters and times seconds throughout the
//! document; the runtime converts angles to radians through accessor methods.
//! Unknown keys anywhere in the document are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::channel::ChannelParams;
use crate::estimation::FilterConfig;
use crate::integrity::IntegrityConfig;
use crate::scenario::constellation::ConstellationConfig;
use crate::scenario::events::EventSchedule;
use crate::scenario::trajectory::TrajectoryConfig;
use crate::tracking::TrackingConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config field `{field}`: {constraint}")]
    Invalid { field: String, constraint: String },
}

pub(crate) fn invalid(field: &str, constraint: &str) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        constraint: constraint.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub duration_s: f64,
    pub dt_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub constellation: ConstellationConfig,
    #[serde(default)]
    pub trajectory: TrajectoryConfig,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub tracking: TrackingConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub integrity: IntegrityConfig,
    #[serde(default)]
    pub events: EventSchedule,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(invalid("duration_s", "must be > 0"));
        }
        if !(self.dt_s > 0.0 && self.dt_s <= self.duration_s) {
            return Err(invalid("dt_s", "must satisfy 0 < dt_s <= duration_s"));
        }
        self.constellation.validate()?;
        self.trajectory.validate()?;
        self.channel.validate()?;
        self.tracking.validate(self.dt_s)?;
        self.filter.validate()?;
        self.integrity.validate()?;
        self.events.validate(self.duration_s)?;
        Ok(())
    }

    /// Number of epochs, floor(duration / dt).
    pub fn epoch_count(&self) -> usize {
        (self.duration_s / self.dt_s + 1e-9).floor() as usize
    }

    /// SHA-256 of the canonical JSON serialization (fixed field order).
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Parses and validates a scenario document.
pub fn load_config(document: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = serde_json::from_str(document)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config_file(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::FadingModel;
    use crate::estimation::FilterKind;
    use crate::tracking::TrackingMode;

    #[test]
    fn minimal_document_gets_defaults() {
        let cfg = load_config(r#"{"duration_s": 10, "dt_s": 0.1, "seed": 3}"#).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.epoch_count(), 100);
        assert_eq!(cfg.constellation, ConstellationConfig::default());
        assert_eq!(cfg.channel.model, FadingModel::None);
        assert_eq!(cfg.filter.kind, FilterKind::Ekf);
        assert_eq!(cfg.tracking.mode, TrackingMode::Vector);
        assert!(!cfg.integrity.raim);
        assert!((cfg.integrity.pfa - 0.01).abs() < 1e-15);
    }

    #[test]
    fn negative_duration_names_field() {
        let err = load_config(r#"{"duration_s": -5, "dt_s": 0.1, "seed": 1}"#).unwrap_err();
        match err {
            ConfigError::Invalid { field, .. } => assert_eq!(field, "duration_s"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            load_config(r#"{"duration_s": 10, "dt_s": 0.1, "bogus": 1}"#),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            load_config(r#"{"duration_s": 10, "dt_s": 0.1, "channel": {"modle": "none"}}"#),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn malformed_is_parse_error() {
        assert!(matches!(load_config("{ not json"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn dt_larger_than_duration() {
        let err = load_config(r#"{"duration_s": 1, "dt_s": 2}"#).unwrap_err();
        assert!(err.to_string().contains("dt_s"));
    }

    #[test]
    fn fde_requires_raim() {
        let err =
            load_config(r#"{"duration_s": 1, "dt_s": 0.1, "integrity": {"raim": false, "fde": true}}"#).unwrap_err();
        assert!(err.to_string().contains("integrity.fde"));
    }

    #[test]
    fn digest_tracks_content() {
        let a = load_config(r#"{"duration_s": 10, "dt_s": 0.1, "seed": 3}"#).unwrap();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.seed = 4;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
