//! WGS-84 geodetic, ECEF and local east-north-up conversions.
//!
//! All angles are radians. ECEF vectors are plain `nalgebra` 3-vectors in
//! meters; geodetic and ENU coordinates get their own types so the frame is
//! always explicit at call sites.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// WGS-84 semi-major axis (m).
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS-84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// First eccentricity squared.
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

const MAX_GEODETIC_ITERATIONS: usize = 20;
const LATITUDE_TOLERANCE: f64 = 1e-12;

/// Earth-centered Earth-fixed position or velocity, meters (or m/s).
pub type EcefVector = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("latitude iteration did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("point is too close to the Earth's center for a geodetic solution")]
    DegenerateCenter,
    #[error("coincident points have no line of sight")]
    Coincident,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticCoord {
    /// Radians, within [-pi/2, pi/2].
    pub latitude: f64,
    /// Radians, within (-pi, pi].
    pub longitude: f64,
    /// Meters above the ellipsoid.
    pub height: f64,
}

impl GeodeticCoord {
    pub fn new(latitude: f64, longitude: f64, height: f64) -> Self {
        Self {
            latitude,
            longitude: normalize_longitude(longitude),
            height,
        }
    }

    pub fn from_degrees(lat_deg: f64, lon_deg: f64, height: f64) -> Self {
        Self::new(lat_deg.to_radians(), lon_deg.to_radians(), height)
    }

    /// Rotation taking ECEF vectors into the local ENU frame (rows are the
    /// east, north and up unit vectors).
    pub fn enu_rotation(&self) -> Matrix3<f64> {
        let (sl, cl) = self.latitude.sin_cos();
        let (so, co) = self.longitude.sin_cos();
        Matrix3::new(-so, co, 0.0, -sl * co, -sl * so, cl, cl * co, cl * so, sl)
    }
}

/// Local tangent-plane offset in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnuVector {
    pub east: f64,
    pub north: f64,
    pub up: f64,
}

impl EnuVector {
    pub fn new(east: f64, north: f64, up: f64) -> Self {
        Self { east, north, up }
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.east, self.north, self.up)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn norm(&self) -> f64 {
        self.as_vector().norm()
    }
}

impl std::ops::Sub for EnuVector {
    type Output = EnuVector;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.east - rhs.east, self.north - rhs.north, self.up - rhs.up)
    }
}

fn normalize_longitude(lon: f64) -> f64 {
    let mut l = lon.rem_euclid(TAU);
    if l > PI {
        l -= TAU;
    }
    l
}

pub fn geodetic_to_ecef(g: &GeodeticCoord) -> EcefVector {
    let (sl, cl) = g.latitude.sin_cos();
    let (so, co) = g.longitude.sin_cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * sl * sl).sqrt();
    Vector3::new(
        (n + g.height) * cl * co,
        (n + g.height) * cl * so,
        (n * (1.0 - WGS84_E2) + g.height) * sl,
    )
}

/// Inverse of [`geodetic_to_ecef`] by fixed-point iteration on latitude.
pub fn ecef_to_geodetic(p: &EcefVector) -> Result<GeodeticCoord, FrameError> {
    if p.norm() < 1.0 {
        return Err(FrameError::DegenerateCenter);
    }
    let rho = p.x.hypot(p.y);
    let longitude = if rho == 0.0 { 0.0 } else { p.y.atan2(p.x) };

    let mut lat = p.z.atan2(rho * (1.0 - WGS84_E2));
    for _ in 0..MAX_GEODETIC_ITERATIONS {
        let (sl, cl) = lat.sin_cos();
        let n = WGS84_A / (1.0 - WGS84_E2 * sl * sl).sqrt();
        let h = rho * cl + p.z * sl - WGS84_A * (1.0 - WGS84_E2 * sl * sl).sqrt();
        let next = p.z.atan2(rho * (1.0 - WGS84_E2 * n / (n + h)));
        let delta = (next - lat).abs();
        lat = next;
        if delta < LATITUDE_TOLERANCE {
            let (sl, cl) = lat.sin_cos();
            let height = rho * cl + p.z * sl - WGS84_A * (1.0 - WGS84_E2 * sl * sl).sqrt();
            return Ok(GeodeticCoord::new(lat, longitude, height));
        }
    }
    Err(FrameError::NoConvergence(MAX_GEODETIC_ITERATIONS))
}

pub fn ecef_to_enu(p: &EcefVector, reference: &GeodeticCoord) -> EnuVector {
    let delta = p - geodetic_to_ecef(reference);
    EnuVector::from_vector(&(reference.enu_rotation() * delta))
}

/// ENU offset from `reference` back to ECEF.
pub fn enu_to_ecef(enu: &EnuVector, reference: &GeodeticCoord) -> EcefVector {
    geodetic_to_ecef(reference) + reference.enu_rotation().transpose() * enu.as_vector()
}

/// Rotates an ECEF direction (e.g. a velocity) into ENU without translation.
pub fn rotate_to_enu(v: &Vector3<f64>, reference: &GeodeticCoord) -> EnuVector {
    EnuVector::from_vector(&(reference.enu_rotation() * v))
}

pub fn rotate_from_enu(v: &EnuVector, reference: &GeodeticCoord) -> Vector3<f64> {
    reference.enu_rotation().transpose() * v.as_vector()
}

/// Elevation and azimuth (radians) of `sv` seen from `rx`, in the tangent
/// frame at `reference`. Azimuth is in [0, 2pi) and is 0 at the zenith.
pub fn elevation_azimuth(rx: &EcefVector, sv: &EcefVector, reference: &GeodeticCoord) -> (f64, f64) {
    let los = sv - rx;
    let range = los.norm();
    let enu = reference.enu_rotation() * los;
    let elevation = (enu.z / range).clamp(-1.0, 1.0).asin();
    let horizontal = enu.x.hypot(enu.y);
    let azimuth = if horizontal <= 1e-12 * range {
        0.0
    } else {
        enu.x.atan2(enu.y).rem_euclid(TAU)
    };
    (elevation, azimuth)
}

pub fn unit_los(rx: &EcefVector, sv: &EcefVector) -> Result<EcefVector, FrameError> {
    let d = sv - rx;
    let n = d.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(FrameError::Coincident);
    }
    Ok(d / n)
}
