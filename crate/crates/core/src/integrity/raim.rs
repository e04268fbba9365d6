use nalgebra::{DMatrix, DVector};

use super::{chi_square_quantile, Capability, IntegrityConfig, RaimVerdict, MIN_SVS_DETECT, MIN_SVS_EXCLUDE};
use crate::estimation::MeasurementModel;
use crate::tracking::MeasurementSet;

/// Weighted LS residual statistic for residuals `y`, geometry `g` (m x 4) and
/// per-row variances. `None` when m < 5 or `g` is numerically rank deficient.
pub fn residual_statistic(y: &DVector<f64>, g: &DMatrix<f64>, variances: &[f64]) -> Option<(f64, usize)> {
    let m = y.len();
    if m < MIN_SVS_DETECT || g.nrows() != m || variances.len() != m {
        return None;
    }
    let w = DVector::from_iterator(m, variances.iter().map(|v| 1.0 / v));
    let mut gw = g.clone();
    for (i, mut row) in gw.row_iter_mut().enumerate() {
        row *= w[i];
    }
    let normal = g.transpose() * &gw;
    let eig = normal.clone().symmetric_eigenvalues();
    let max = eig.max();
    if !(eig.min() > 1e-12 * max) {
        return None;
    }
    let chol = normal.cholesky()?;
    let delta = chol.solve(&(gw.transpose() * y));
    let r = y - g * delta;
    let stat = r.iter().zip(w.iter()).map(|(ri, wi)| ri * ri * wi).sum();
    Some((stat, m - 4))
}

/// Rows of `mm` whose satellite has a valid entry in `set`.
fn select(
    set: &MeasurementSet,
    mm: &MeasurementModel,
    skip: Option<u32>,
) -> (Vec<u32>, DVector<f64>, DMatrix<f64>, Vec<f64>) {
    let g_all = mm.geometry();
    let mut ids = Vec::new();
    let mut y = Vec::new();
    let mut rows = Vec::new();
    let mut var = Vec::new();
    for (i, sv) in mm.sv_ids.iter().enumerate() {
        if Some(*sv) == skip {
            continue;
        }
        if let Some(e) = set.valid().find(|e| e.sv_id == *sv) {
            ids.push(*sv);
            y.push(e.residual);
            rows.push(i);
            var.push(e.variance);
        }
    }
    let g = DMatrix::from_fn(rows.len(), 4, |r, c| g_all[(rows[r], c)]);
    (ids, DVector::from_vec(y), g, var)
}

/// Statistic and degrees of freedom over the valid entries of `set`.
pub fn ls_residual_statistic(set: &MeasurementSet, mm: &MeasurementModel) -> Option<(f64, usize)> {
    let (_, y, g, var) = select(set, mm, None);
    residual_statistic(&y, &g, &var)
}

pub fn raim_detect(set: &MeasurementSet, mm: &MeasurementModel, cfg: &IntegrityConfig) -> RaimVerdict {
    let Some((statistic, dof)) = ls_residual_statistic(set, mm) else {
        return RaimVerdict::unavailable();
    };
    let threshold = chi_square_quantile(dof as u32, 1.0 - cfg.pfa);
    let m = dof + 4;
    RaimVerdict {
        statistic,
        threshold,
        degrees_of_freedom: dof,
        detected: statistic > threshold,
        excluded: Vec::new(),
        capability: if cfg.fde && m >= MIN_SVS_EXCLUDE {
            Capability::DetectAndExclude
        } else {
            Capability::DetectOnly
        },
        unresolved: false,
    }
}

/// Single-fault exclusion after a detection. The excluded satellite is the
/// one whose leave-one-out subset passes with the smallest statistic (ties to
/// the lowest id). No passing subset, fewer than six satellites or FDE
/// disabled leaves the detection unresolved.
pub fn fde_exclude(
    set: &MeasurementSet,
    mm: &MeasurementModel,
    cfg: &IntegrityConfig,
    detection: &RaimVerdict,
) -> RaimVerdict {
    let mut verdict = detection.clone();
    if !detection.detected {
        return verdict;
    }
    if !cfg.fde || detection.capability != Capability::DetectAndExclude {
        verdict.capability = Capability::DetectOnly;
        verdict.unresolved = true;
        return verdict;
    }
    let (ids, ..) = select(set, mm, None);
    let sub_threshold = chi_square_quantile((ids.len() - 5) as u32, 1.0 - cfg.pfa);
    let mut best: Option<(f64, u32)> = None;
    for &sv in &ids {
        let (_, y, g, var) = select(set, mm, Some(sv));
        let Some((stat, _)) = residual_statistic(&y, &g, &var) else {
            continue;
        };
        if stat <= sub_threshold && best.is_none_or(|(s, _)| stat < s) {
            best = Some((stat, sv));
        }
    }
    match best {
        Some((_, sv)) => verdict.excluded = vec![sv],
        None => verdict.unresolved = true,
    }
    verdict
}

/// Full per-epoch integrity check as configured: nothing when RAIM is off,
/// detection, then exclusion when something was detected.
pub fn screen(set: &MeasurementSet, mm: &MeasurementModel, cfg: &IntegrityConfig) -> RaimVerdict {
    if !cfg.raim {
        return RaimVerdict::unavailable();
    }
    let detection = raim_detect(set, mm, cfg);
    fde_exclude(set, mm, cfg, &detection)
}

pub fn gate_measurements(set: &MeasurementSet, verdict: &RaimVerdict) -> MeasurementSet {
    if verdict.detected && verdict.unresolved {
        let all: Vec<u32> = set.entries.iter().map(|e| e.sv_id).collect();
        return set.without(&all);
    }
    set.without(&verdict.excluded)
}
