use nalgebra::{DMatrix, DVector};

use super::{symmetrize, ProcessNoise, IDX_CLOCK_BIAS, IDX_CLOCK_DRIFT, IDX_POS, IDX_VEL, STATE_DIM};

/// Discrete transition and process noise for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessModel {
    pub transition: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    pub dt: f64,
}

/// Position/velocity integrators per axis plus a two-state clock, with
/// continuous white-noise acceleration (and clock) discretization.
pub fn make_process_model(dt: f64, psd: &ProcessNoise) -> ProcessModel {
    let n = STATE_DIM;
    let mut phi = DMatrix::<f64>::identity(n, n);
    let mut q = DMatrix::<f64>::zeros(n, n);
    let (dt2, dt3) = (dt * dt, dt * dt * dt);
    let sa = psd.accel_psd;
    for axis in 0..3 {
        let (p, v) = (IDX_POS + axis, IDX_VEL + axis);
        phi[(p, v)] = dt;
        q[(p, p)] = sa * dt3 / 3.0;
        q[(p, v)] = sa * dt2 / 2.0;
        q[(v, p)] = sa * dt2 / 2.0;
        q[(v, v)] = sa * dt;
    }
    let (b, d) = (IDX_CLOCK_BIAS, IDX_CLOCK_DRIFT);
    phi[(b, d)] = dt;
    q[(b, b)] = psd.clock_bias_psd * dt + psd.clock_drift_psd * dt3 / 3.0;
    q[(b, d)] = psd.clock_drift_psd * dt2 / 2.0;
    q[(d, b)] = psd.clock_drift_psd * dt2 / 2.0;
    q[(d, d)] = psd.clock_drift_psd * dt;
    ProcessModel {
        transition: phi,
        noise: q,
        dt,
    }
}

/// x- = Phi x, P- = Phi P Phi' + Q (re-symmetrized).
pub fn kf_predict(x: &DVector<f64>, p: &DMatrix<f64>, model: &ProcessModel) -> (DVector<f64>, DMatrix<f64>) {
    let phi = &model.transition;
    let x_pred = phi * x;
    let p_pred = phi * p * phi.transpose() + &model.noise;
    (x_pred, symmetrize(&p_pred))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn psd(a: f64, b: f64, d: f64) -> ProcessNoise {
        ProcessNoise {
            accel_psd: a,
            clock_bias_psd: b,
            clock_drift_psd: d,
        }
    }

    #[test]
    fn zero_dt_is_identity() {
        let m = make_process_model(0.0, &psd(1.0, 1.0, 1.0));
        assert_eq!(m.transition, DMatrix::identity(8, 8));
        assert_eq!(m.noise, DMatrix::zeros(8, 8));
    }

    #[test]
    fn integrator_block() {
        let m = make_process_model(0.1, &psd(0.0, 0.0, 0.0));
        let mut x = DVector::zeros(8);
        x[3] = 10.0;
        x[7] = 2.0;
        let (xp, _) = kf_predict(&x, &DMatrix::identity(8, 8), &m);
        assert!((xp[0] - 1.0).abs() < 1e-15);
        assert!((xp[6] - 0.2).abs() < 1e-15);
        assert_eq!(xp[3], 10.0);
    }

    #[test]
    fn identity_without_noise_leaves_state() {
        let m = ProcessModel {
            transition: DMatrix::identity(8, 8),
            noise: DMatrix::zeros(8, 8),
            dt: 1.0,
        };
        let x = DVector::from_fn(8, |i, _| i as f64);
        let p = DMatrix::from_fn(8, 8, |i, j| if i == j { 2.0 } else { 0.1 });
        let (xp, pp) = kf_predict(&x, &p, &m);
        assert_eq!(xp, x);
        assert_eq!(pp, p);
    }

    #[test]
    fn static_position_variance_grows_with_cubic_term() {
        // 2x2 block starting from P = 0: P_pp = S dt^3 / 3 after one step,
        // and after two steps S (2dt)^3 / 3 exactly (the discretization is exact)
        let dt = 0.5;
        let s = 2.0;
        let m = make_process_model(dt, &psd(s, 0.0, 0.0));
        let x = DVector::zeros(8);
        let (x1, p1) = kf_predict(&x, &DMatrix::zeros(8, 8), &m);
        assert!((p1[(0, 0)] - s * dt.powi(3) / 3.0).abs() < 1e-15);
        let (_, p2) = kf_predict(&x1, &p1, &m);
        assert!((p2[(0, 0)] - s * (2.0 * dt).powi(3) / 3.0).abs() < 1e-12);
        assert!((p2[(3, 3)] - s * 2.0 * dt).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn q_is_symmetric_psd(dt in 1e-3..10.0f64, a in 0.0..100.0f64, b in 0.0..10.0f64, d in 0.0..10.0f64) {
            let m = make_process_model(dt, &psd(a, b, d));
            prop_assert_eq!(&m.noise, &m.noise.transpose());
            let min = m.noise.clone().symmetric_eigenvalues().min();
            prop_assert!(min >= -1e-12 * m.noise.trace().max(1.0));
        }

        #[test]
        fn prediction_adds_nonnegative_trace(dt in 1e-3..2.0f64, a in 0.0..10.0f64) {
            let m = make_process_model(dt, &psd(a, 0.1, 0.1));
            let p = DMatrix::<f64>::identity(8, 8) * 3.0;
            let (_, pp) = kf_predict(&DVector::zeros(8), &p, &m);
            let base = (&m.transition * &p * m.transition.transpose()).trace();
            prop_assert!(pp.trace() >= base - 1e-12);
        }
    }
}
