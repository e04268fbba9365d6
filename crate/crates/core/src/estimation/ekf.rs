use nalgebra::{DMatrix, DVector};

use super::{symmetrize, FilterError, MeasurementModel, UpdateResult};

/// EKF measurement update from residuals y = z - h(x-), with a Joseph-form
/// covariance update. An empty residual vector returns the prior unchanged.
pub fn ekf_update(
    x: &DVector<f64>,
    p: &DMatrix<f64>,
    residuals: &DVector<f64>,
    mm: &MeasurementModel,
) -> Result<UpdateResult, FilterError> {
    if residuals.is_empty() {
        return Ok(UpdateResult {
            x: x.clone(),
            p: p.clone(),
            innovations: DVector::zeros(0),
            nis: 0.0,
            psd_repaired: false,
        });
    }
    let h = &mm.jacobian;
    let r = &mm.noise;
    if h.nrows() != residuals.len() || r.nrows() != residuals.len() || h.ncols() != x.len() {
        return Err(FilterError::Dimension("H, R and residuals must agree"));
    }
    let s = symmetrize(&(h * p * h.transpose() + r));
    let chol = s.clone().cholesky().ok_or(FilterError::SingularInnovation)?;
    // K' = S^-1 H P
    let gain = chol.solve(&(h * p)).transpose();
    let x_post = x + &gain * residuals;
    let n = x.len();
    let ikh = DMatrix::<f64>::identity(n, n) - &gain * h;
    let p_post = &ikh * p * ikh.transpose() + &gain * r * gain.transpose();
    let nis = residuals.dot(&chol.solve(residuals));
    Ok(UpdateResult {
        x: x_post,
        p: symmetrize(&p_post),
        innovations: residuals.clone(),
        nis,
        psd_repaired: false,
    })
}
