//! Vehicle truth trajectory in the tangent plane of the start point.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::estimation::NavState;
use crate::frames::{enu_to_ecef, rotate_from_enu, EnuVector, GeodeticCoord};
use crate::scenario::config::{invalid, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodeticDeg {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub height_m: f64,
}

impl GeodeticDeg {
    pub fn to_geodetic(&self) -> GeodeticCoord {
        GeodeticCoord::from_degrees(self.lat_deg, self.lon_deg, self.height_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryMode {
    Static,
    Waypoints,
    /// Circle about the start point in the horizontal plane.
    Circular {
        radius_m: f64,
        period_s: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    pub initial_position: GeodeticDeg,
    pub mode: TrajectoryMode,
    pub speed_mps: f64,
    /// East/north/up offsets from the start point, meters.
    pub waypoints: Vec<[f64; 3]>,
    /// Wrap from the last waypoint back to the first and keep going.
    pub closed: bool,
    /// Truth receiver clock bias at t = 0, meters.
    pub clock_bias_m: f64,
    pub clock_drift_mps: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            initial_position: GeodeticDeg {
                lat_deg: 25.15,
                lon_deg: 121.77,
                height_m: 20.0,
            },
            mode: TrajectoryMode::Static,
            speed_mps: 0.0,
            waypoints: Vec::new(),
            closed: false,
            clock_bias_m: 0.0,
            clock_drift_mps: 0.0,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.initial_position;
        if !(p.lat_deg.abs() <= 90.0) {
            return Err(invalid(
                "trajectory.initial_position.lat_deg",
                "must be within [-90, 90]",
            ));
        }
        if !p.lon_deg.is_finite() || !p.height_m.is_finite() {
            return Err(invalid("trajectory.initial_position", "must be finite"));
        }
        if !(self.speed_mps >= 0.0) || !self.speed_mps.is_finite() {
            return Err(invalid("trajectory.speed_mps", "must be >= 0"));
        }
        if !self.clock_bias_m.is_finite() || !self.clock_drift_mps.is_finite() {
            return Err(invalid("trajectory.clock_bias_m", "clock terms must be finite"));
        }
        match self.mode {
            TrajectoryMode::Static => {}
            TrajectoryMode::Waypoints => {
                if self.waypoints.len() < 2 {
                    return Err(invalid(
                        "trajectory.waypoints",
                        "waypoint mode needs at least 2 waypoints",
                    ));
                }
                if self.waypoints.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(invalid("trajectory.waypoints", "must be finite"));
                }
                let mut pairs: Vec<(usize, usize)> = (1..self.waypoints.len()).map(|i| (i - 1, i)).collect();
                if self.closed {
                    pairs.push((self.waypoints.len() - 1, 0));
                }
                for (a, b) in pairs {
                    if self.waypoints[a] == self.waypoints[b] {
                        return Err(invalid(
                            "trajectory.waypoints",
                            "consecutive waypoints must be distinct",
                        ));
                    }
                }
            }
            TrajectoryMode::Circular { radius_m, period_s } => {
                if !(radius_m > 0.0) || !(period_s > 0.0) {
                    return Err(invalid("trajectory.mode.circular", "radius_m and period_s must be > 0"));
                }
            }
        }
        Ok(())
    }

    pub fn reference(&self) -> GeodeticCoord {
        self.initial_position.to_geodetic()
    }

    /// Local position and velocity at time `t`.
    pub fn enu_state(&self, t: f64) -> (EnuVector, EnuVector) {
        match self.mode {
            TrajectoryMode::Static => (EnuVector::default(), EnuVector::default()),
            TrajectoryMode::Circular { radius_m, period_s } => {
                let w = TAU / period_s;
                let (s, c) = (w * t).sin_cos();
                (
                    EnuVector::new(radius_m * c, radius_m * s, 0.0),
                    EnuVector::new(-radius_m * w * s, radius_m * w * c, 0.0),
                )
            }
            TrajectoryMode::Waypoints => self.waypoint_state(t),
        }
    }

    fn waypoint_state(&self, t: f64) -> (EnuVector, EnuVector) {
        let pts: Vec<EnuVector> = self
            .waypoints
            .iter()
            .map(|w| EnuVector::new(w[0], w[1], w[2]))
            .collect();
        let mut segments: Vec<(EnuVector, EnuVector)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
        if self.closed {
            segments.push((pts[pts.len() - 1], pts[0]));
        }
        let lengths: Vec<f64> = segments.iter().map(|(a, b)| (*b - *a).norm()).collect();
        let total: f64 = lengths.iter().sum();
        if self.speed_mps == 0.0 {
            return (pts[0], EnuVector::default());
        }
        let mut s = self.speed_mps * t;
        if self.closed {
            s = s.rem_euclid(total);
        } else if s >= total {
            return (*pts.last().unwrap(), EnuVector::default());
        }
        for ((a, b), len) in segments.iter().zip(&lengths) {
            if s <= *len {
                let dir = (*b - *a).as_vector() / *len;
                let pos = a.as_vector() + dir * s;
                return (
                    EnuVector::from_vector(&pos),
                    EnuVector::from_vector(&(dir * self.speed_mps)),
                );
            }
            s -= len;
        }
        // rounding at the very end of a closed loop
        let (a, b) = segments[segments.len() - 1];
        let dir = (b - a).as_vector() / lengths[lengths.len() - 1];
        (b, EnuVector::from_vector(&(dir * self.speed_mps)))
    }
}

/// Truth navigation state at time `t`.
pub fn truth_state(cfg: &TrajectoryConfig, t: f64) -> NavState {
    let reference = cfg.reference();
    let (pos, vel) = cfg.enu_state(t);
    NavState {
        position: enu_to_ecef(&pos, &reference),
        velocity: rotate_from_enu(&vel, &reference),
        clock_bias: cfg.clock_bias_m + cfg.clock_drift_mps * t,
        clock_drift: cfg.clock_drift_mps,
    }
}
