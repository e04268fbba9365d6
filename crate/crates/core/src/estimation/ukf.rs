//! Scaled unscented transform and the UKF measurement update.
//!
//! Transformed sigma points are handled as deviations from the image of the
//! central point. With alpha = 1e-3 the central weight is about -1e6 and the
//! pseudoranges are ~2e7 m, so working with absolute values would throw away
//! most of the significant digits of the mean. The deviation form is the same
//! algebra without that cancellation.

use nalgebra::{DMatrix, DVector};

use super::{symmetrize, FilterError, UkfParams, UpdateResult};

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPointSet {
    /// `points[0]` is the mean; then `+` columns, then `-` columns.
    pub points: Vec<DVector<f64>>,
    pub weights_mean: Vec<f64>,
    pub weights_cov: Vec<f64>,
    /// Columns of the lower Cholesky factor of (n+lambda)P.
    pub spread: DMatrix<f64>,
}

impl SigmaPointSet {
    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.points[0]
    }

    /// Weighted mean of the points, summed as offsets from the center. The
    /// symmetric pairs carry equal weights and cancel exactly, so this is the
    /// center bit for bit.
    pub fn weighted_mean(&self) -> DVector<f64> {
        let n = self.dim();
        let mut sum = DVector::zeros(n);
        for i in 0..n {
            let c = self.spread.column(i);
            sum += c * self.weights_mean[i + 1] + (-c) * self.weights_mean[i + 1 + n];
        }
        self.center() + sum
    }

    /// Weighted covariance of the points about the center.
    pub fn weighted_covariance(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut cov = DMatrix::zeros(n, n);
        for i in 0..n {
            let c = self.spread.column(i);
            cov += c * c.transpose() * (self.weights_cov[i + 1] + self.weights_cov[i + 1 + n]);
        }
        cov
    }
}

/// 2n+1 symmetric sigma points from the lower Cholesky factor of (n+lambda)P.
pub fn sigma_points(x: &DVector<f64>, p: &DMatrix<f64>, params: &UkfParams) -> Result<SigmaPointSet, FilterError> {
    let n = x.len();
    let lambda = params.lambda(n);
    let scale = n as f64 + lambda;
    if !(scale > 0.0) {
        return Err(FilterError::NotPositiveDefinite);
    }
    let l = (p * scale).cholesky().ok_or(FilterError::NotPositiveDefinite)?.l();
    let mut points = Vec::with_capacity(2 * n + 1);
    points.push(x.clone());
    for i in 0..n {
        points.push(x + l.column(i));
    }
    for i in 0..n {
        points.push(x - l.column(i));
    }
    let w0 = lambda / scale;
    let wi = 1.0 / (2.0 * scale);
    let mut weights_mean = vec![wi; 2 * n + 1];
    let mut weights_cov = vec![wi; 2 * n + 1];
    weights_mean[0] = w0;
    weights_cov[0] = w0 + (1.0 - params.alpha * params.alpha + params.beta);
    Ok(SigmaPointSet {
        points,
        weights_mean,
        weights_cov,
        spread: l,
    })
}

/// [`sigma_points`] with one retry after adding 1e-9 trace(P)/n to the
/// diagonal. The flag reports whether the repair was needed.
pub fn sigma_points_with_repair(
    x: &DVector<f64>,
    p: &DMatrix<f64>,
    params: &UkfParams,
) -> Result<(SigmaPointSet, bool), FilterError> {
    match sigma_points(x, p, params) {
        Ok(s) => Ok((s, false)),
        Err(_) => {
            let n = x.len();
            let jitter = 1e-9 * p.trace().abs() / n as f64;
            let repaired = p + DMatrix::<f64>::identity(n, n) * jitter;
            sigma_points(x, &repaired, params).map(|s| (s, true))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtResult {
    pub mean: DVector<f64>,
    /// mean - f(center), computed without cancellation.
    pub mean_shift: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Sum of W_c (chi - x)(f(chi) - mean)'.
    pub cross_cov: DMatrix<f64>,
}

/// Offset of sigma point `i` from the center: 0, then +columns, then -columns
/// of the spread.
fn offset(points: &SigmaPointSet, i: usize) -> DVector<f64> {
    let n = points.dim();
    match i {
        0 => DVector::zeros(n),
        i if i <= n => points.spread.column(i - 1).into_owned(),
        i => -points.spread.column(i - 1 - n),
    }
}

pub fn unscented_transform<F>(points: &SigmaPointSet, f: F, noise_cov: &DMatrix<f64>) -> UtResult
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let center = points.center().clone();
    let f0 = f(&center);
    let mut ut = unscented_transform_deviations(points, |d| f(&(&center + d)) - &f0, noise_cov);
    ut.mean += &f0;
    ut
}

/// Transform through a deviation map g(d) = f(center + d) - f(center). When
/// g is evaluated without forming f(center + d) in full, the small
/// deviations keep their precision. The returned `mean` is the mean shift
/// alone; add f(center) for the mean.
pub fn unscented_transform_deviations<G>(points: &SigmaPointSet, g: G, noise_cov: &DMatrix<f64>) -> UtResult
where
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = points.dim();
    let offsets: Vec<DVector<f64>> = (0..points.points.len()).map(|i| offset(points, i)).collect();
    let deviations: Vec<DVector<f64>> = offsets.iter().map(&g).collect();
    let m = deviations[0].len();
    let mut shift = DVector::zeros(m);
    for (w, d) in points.weights_mean.iter().zip(&deviations) {
        shift += d * *w;
    }

    let mut cov = noise_cov.clone();
    let mut cross = DMatrix::zeros(n, m);
    for i in 0..offsets.len() {
        let w = points.weights_cov[i];
        let e = &deviations[i] - &shift;
        cov += &e * e.transpose() * w;
        cross += &offsets[i] * e.transpose() * w;
    }
    UtResult {
        mean: shift.clone(),
        mean_shift: shift,
        cov: symmetrize(&cov),
        cross_cov: cross,
    }
}

/// UKF measurement update. `residuals` are z - h(x-), so the innovation is
/// the residual minus the transform's mean shift away from h(x-).
pub fn ukf_update<F>(
    x: &DVector<f64>,
    p: &DMatrix<f64>,
    residuals: &DVector<f64>,
    h: F,
    noise: &DMatrix<f64>,
    params: &UkfParams,
) -> Result<UpdateResult, FilterError>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let h0 = h(x);
    ukf_update_deviations(x, p, residuals, |d| h(&(x + d)) - &h0, noise, params)
}

/// [`ukf_update`] with the measurement function given as a deviation map
/// g(d) = h(x + d) - h(x).
pub fn ukf_update_deviations<G>(
    x: &DVector<f64>,
    p: &DMatrix<f64>,
    residuals: &DVector<f64>,
    g: G,
    noise: &DMatrix<f64>,
    params: &UkfParams,
) -> Result<UpdateResult, FilterError>
where
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    if residuals.is_empty() {
        return Ok(UpdateResult {
            x: x.clone(),
            p: p.clone(),
            innovations: DVector::zeros(0),
            nis: 0.0,
            psd_repaired: false,
        });
    }
    let (points, repaired) = sigma_points_with_repair(x, p, params)?;
    let ut = unscented_transform_deviations(&points, g, noise);
    if ut.cov.nrows() != residuals.len() {
        return Err(FilterError::Dimension("measurement function and residuals must agree"));
    }
    let innovation = residuals - &ut.mean_shift;
    let chol = ut.cov.clone().cholesky().ok_or(FilterError::SingularInnovation)?;
    // K' = S^-1 C'
    let gain = chol.solve(&ut.cross_cov.transpose()).transpose();
    let x_post = x + &gain * &innovation;
    let p_post = p - &gain * &ut.cov * gain.transpose();
    let nis = innovation.dot(&chol.solve(&innovation));
    Ok(UpdateResult {
        x: x_post,
        p: symmetrize(&p_post),
        innovations: innovation,
        nis,
        psd_repaired: repaired,
    })
}
