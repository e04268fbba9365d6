//! Walker-style circular-orbit constellation.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::frames::{elevation_azimuth, EcefVector, GeodeticCoord};
use crate::scenario::config::{invalid, ConfigError};

/// Earth gravitational parameter (m^3/s^2).
pub const GM_EARTH: f64 = 3.986_004_418e14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstellationConfig {
    pub planes: u32,
    pub sats_per_plane: u32,
    pub inclination_deg: f64,
    pub orbit_radius_m: f64,
    /// RAAN of the first plane.
    pub raan_offset_deg: f64,
    /// Along-track phasing between adjacent planes.
    pub phase_offset_deg: f64,
    pub elevation_mask_deg: f64,
}

impl Default for ConstellationConfig {
    fn default() -> Self {
        Self {
            planes: 6,
            sats_per_plane: 4,
            inclination_deg: 55.0,
            orbit_radius_m: 26_559_700.0,
            raan_offset_deg: 0.0,
            phase_offset_deg: 15.0,
            elevation_mask_deg: 10.0,
        }
    }
}

impl ConstellationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.planes < 1 {
            return Err(invalid("constellation.planes", "must be >= 1"));
        }
        if self.sats_per_plane < 1 {
            return Err(invalid("constellation.sats_per_plane", "must be >= 1"));
        }
        if !(self.orbit_radius_m > 6.5e6) || !self.orbit_radius_m.is_finite() {
            return Err(invalid("constellation.orbit_radius_m", "must be > 6.5e6 m"));
        }
        if !(self.elevation_mask_deg >= 0.0 && self.elevation_mask_deg < 90.0) {
            return Err(invalid("constellation.elevation_mask_deg", "must be in [0, 90)"));
        }
        for (name, v) in [
            ("constellation.inclination_deg", self.inclination_deg),
            ("constellation.raan_offset_deg", self.raan_offset_deg),
            ("constellation.phase_offset_deg", self.phase_offset_deg),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    pub fn inclination(&self) -> f64 {
        self.inclination_deg.to_radians()
    }

    pub fn elevation_mask(&self) -> f64 {
        self.elevation_mask_deg.to_radians()
    }

    /// Mean motion sqrt(mu / R^3), rad/s.
    pub fn angular_rate(&self) -> f64 {
        (GM_EARTH / self.orbit_radius_m.powi(3)).sqrt()
    }

    pub fn len(&self) -> usize {
        (self.planes * self.sats_per_plane) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatelliteState {
    pub sv_id: u32,
    pub position: EcefVector,
    pub velocity: EcefVector,
}

/// Positions and velocities of every satellite at time `t`, ordered by
/// `sv_id` (plane-major, 1-based).
pub fn propagate_constellation(cfg: &ConstellationConfig, t: f64) -> Vec<SatelliteState> {
    let r = cfg.orbit_radius_m;
    let w = cfg.angular_rate();
    let (si, ci) = cfg.inclination().sin_cos();
    let mut out = Vec::with_capacity(cfg.len());
    for plane in 0..cfg.planes {
        let raan = cfg.raan_offset_deg.to_radians() + TAU * f64::from(plane) / f64::from(cfg.planes);
        let (so, co) = raan.sin_cos();
        for slot in 0..cfg.sats_per_plane {
            let u0 = TAU * f64::from(slot) / f64::from(cfg.sats_per_plane)
                + f64::from(plane) * cfg.phase_offset_deg.to_radians();
            let (su, cu) = (u0 + w * t).sin_cos();
            let position = Vector3::new(r * (co * cu - so * su * ci), r * (so * cu + co * su * ci), r * su * si);
            let velocity = Vector3::new(
                r * w * (-co * su - so * cu * ci),
                r * w * (-so * su + co * cu * ci),
                r * w * cu * si,
            );
            out.push(SatelliteState {
                sv_id: plane * cfg.sats_per_plane + slot + 1,
                position,
                velocity,
            });
        }
    }
    out
}

/// Ids of satellites strictly above `mask`, ascending.
pub fn visible_satellites(sats: &[SatelliteState], rx: &EcefVector, reference: &GeodeticCoord, mask: f64) -> Vec<u32> {
    let mut ids: Vec<u32> = sats
        .iter()
        .filter(|s| (s.position - rx).norm() > 0.0)
        .filter(|s| elevation_azimuth(rx, &s.position, reference).0 > mask)
        .map(|s| s.sv_id)
        .collect();
    ids.sort_unstable();
    ids
}
