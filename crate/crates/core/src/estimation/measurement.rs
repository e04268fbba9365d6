use nalgebra::{DMatrix, DVector, Vector3};

use super::{FilterError, IDX_CLOCK_BIAS, STATE_DIM};
use crate::frames::unit_los;
use crate::scenario::SatelliteState;

/// Linearized pseudorange model at a state estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    pub sv_ids: Vec<u32>,
    /// h(x): geometric range plus clock bias.
    pub predicted: DVector<f64>,
    /// m x 8, rows [-u', 0, 0, 0, 1, 0].
    pub jacobian: DMatrix<f64>,
    /// Diagonal measurement covariance.
    pub noise: DMatrix<f64>,
}

impl MeasurementModel {
    pub fn len(&self) -> usize {
        self.sv_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sv_ids.is_empty()
    }

    /// Position and clock-bias columns of H (m x 4).
    pub fn geometry(&self) -> DMatrix<f64> {
        let m = self.len();
        let mut g = DMatrix::zeros(m, 4);
        for i in 0..m {
            for j in 0..3 {
                g[(i, j)] = self.jacobian[(i, j)];
            }
            g[(i, 3)] = self.jacobian[(i, IDX_CLOCK_BIAS)];
        }
        g
    }
}

pub fn predict_pseudoranges(x: &DVector<f64>, sats: &[SatelliteState]) -> DVector<f64> {
    let p = Vector3::new(x[0], x[1], x[2]);
    DVector::from_iterator(
        sats.len(),
        sats.iter().map(|s| (s.position - p).norm() + x[IDX_CLOCK_BIAS]),
    )
}

/// predict_pseudoranges(x + d) - predict_pseudoranges(x), evaluated as
/// (|a - d|^2 - |a|^2) / (|a - d| + |a|) so that offsets of centimeters
/// against 2e7 m ranges keep their digits.
pub fn pseudorange_deviations(x: &DVector<f64>, d: &DVector<f64>, sats: &[SatelliteState]) -> DVector<f64> {
    let p = Vector3::new(x[0], x[1], x[2]);
    let dp = Vector3::new(d[0], d[1], d[2]);
    DVector::from_iterator(
        sats.len(),
        sats.iter().map(|s| {
            let a = s.position - p;
            let b = a - dp;
            (dp.dot(&dp) - 2.0 * a.dot(&dp)) / (a.norm() + b.norm()) + d[IDX_CLOCK_BIAS]
        }),
    )
}

pub fn measurement_model(
    x: &DVector<f64>,
    sats: &[SatelliteState],
    variances: &[f64],
) -> Result<MeasurementModel, FilterError> {
    if sats.len() != variances.len() {
        return Err(FilterError::Dimension("one variance per satellite"));
    }
    let p = Vector3::new(x[0], x[1], x[2]);
    let m = sats.len();
    let mut h = DMatrix::zeros(m, STATE_DIM);
    for (i, s) in sats.iter().enumerate() {
        let u = unit_los(&p, &s.position)?;
        h[(i, 0)] = -u.x;
        h[(i, 1)] = -u.y;
        h[(i, 2)] = -u.z;
        h[(i, IDX_CLOCK_BIAS)] = 1.0;
    }
    Ok(MeasurementModel {
        sv_ids: sats.iter().map(|s| s.sv_id).collect(),
        predicted: predict_pseudoranges(x, sats),
        jacobian: h,
        noise: DMatrix::from_diagonal(&DVector::from_column_slice(variances)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sat(id: u32, x: f64, y: f64, z: f64) -> SatelliteState {
        SatelliteState {
            sv_id: id,
            position: Vector3::new(x, y, z),
            velocity: Vector3::zeros(),
        }
    }

    #[test]
    fn collinear_geometry() {
        let mut x = DVector::zeros(8);
        x[0] = 6_378_137.0;
        x[6] = 12.5;
        let mm = measurement_model(&x, &[sat(1, 26_560_000.0, 0.0, 0.0)], &[1.0]).unwrap();
        assert_eq!(mm.predicted[0], 20_181_863.0 + 12.5);
        let row: Vec<f64> = mm.jacobian.row(0).iter().copied().collect();
        assert_eq!(row, vec![-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn coincident_is_an_error() {
        let x = DVector::zeros(8);
        assert!(matches!(
            measurement_model(&x, &[sat(1, 0.0, 0.0, 0.0)], &[1.0]),
            Err(FilterError::Geometry(_))
        ));
    }

    #[test]
    fn rows_are_unit_with_clock_one() {
        let x = DVector::from_column_slice(&[1e6, 2e6, 6e6, 0.0, 0.0, 0.0, 3.0, 0.0]);
        let sats = [sat(1, 2e7, 1e7, 1e7), sat(2, -1e7, 2e7, 1.5e7), sat(3, 0.0, 0.0, 2.6e7)];
        let mm = measurement_model(&x, &sats, &[1.0, 2.0, 3.0]).unwrap();
        for i in 0..3 {
            let r = mm.jacobian.row(i);
            assert!(((r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt() - 1.0).abs() < 1e-12);
            assert_eq!(r[6], 1.0);
        }
        assert_eq!(mm.noise[(1, 1)], 2.0);
        assert_eq!(mm.geometry().ncols(), 4);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        use crate::rng::{normal, stream};
        let mut rng = stream(8, 0);
        let eps = 0.1;
        for _ in 0..100 {
            let rx = nalgebra::Vector3::new(normal(&mut rng), normal(&mut rng), normal(&mut rng)).normalize() * 6.37e6;
            let dir = nalgebra::Vector3::new(normal(&mut rng), normal(&mut rng), normal(&mut rng)).normalize();
            let s = sat(1, rx.x + 2e7 * dir.x, rx.y + 2e7 * dir.y, rx.z + 2e7 * dir.z);
            let mut x = DVector::zeros(8);
            x.rows_mut(0, 3).copy_from(&rx);
            x[6] = 100.0 * normal(&mut rng);
            let mm = measurement_model(&x, std::slice::from_ref(&s), &[1.0]).unwrap();
            for j in 0..8 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += eps;
                xm[j] -= eps;
                let fd = (predict_pseudoranges(&xp, std::slice::from_ref(&s))[0]
                    - predict_pseudoranges(&xm, std::slice::from_ref(&s))[0])
                    / (2.0 * eps);
                let err = (fd - mm.jacobian[(0, j)]).abs() / mm.jacobian[(0, j)].abs().max(1e-3);
                assert!(err < 1e-4, "column {j}: fd {fd} vs {}", mm.jacobian[(0, j)]);
            }
        }
    }

    #[test]
    fn deviations_match_direct_difference() {
        let s = sat(1, 1.5e7, -1.0e7, 2.0e7);
        let x = DVector::from_column_slice(&[-3.0e6, 5.0e6, 2.7e6, 0.0, 0.0, 0.0, 40.0, 0.0]);
        let d = DVector::from_column_slice(&[30.0, -12.0, 7.5, 1.0, 1.0, 1.0, -3.0, 0.5]);
        let direct = predict_pseudoranges(&(&x + &d), std::slice::from_ref(&s))
            - predict_pseudoranges(&x, std::slice::from_ref(&s));
        let dev = pseudorange_deviations(&x, &d, std::slice::from_ref(&s));
        assert!((direct[0] - dev[0]).abs() < 1e-7);
        assert_eq!(
            pseudorange_deviations(&x, &DVector::zeros(8), std::slice::from_ref(&s))[0],
            0.0
        );
    }
}
