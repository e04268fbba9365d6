use nalgebra::{DMatrix, DVector};

use super::{
    ekf_update, initialize_filter, kf_predict, make_process_model, measurement_model, predict_pseudoranges,
    pseudorange_deviations, ukf_update_deviations, FilterConfig, FilterError, FilterKind, NavState,
};
use crate::rng::SimRng;
use crate::scenario::SatelliteState;
use crate::tracking::MeasurementSet;

/// What happened in one measurement update.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UpdateOutcome {
    pub applied: bool,
    pub psd_repair: bool,
    /// The update raised an error; the prior was kept.
    pub failed: Option<FilterError>,
    pub nis: Option<f64>,
    pub dims: usize,
}

/// EKF or UKF navigation filter with its running estimate.
#[derive(Debug, Clone)]
pub struct NavFilter {
    pub config: FilterConfig,
    pub x: DVector<f64>,
    pub p: DMatrix<f64>,
}

impl NavFilter {
    pub fn new(config: FilterConfig, truth: &NavState, rng: &mut SimRng) -> Self {
        let (x, p) = initialize_filter(&config, truth, rng);
        Self { config, x, p }
    }

    pub fn state(&self) -> NavState {
        NavState::from_vector(&self.x)
    }

    pub fn kind(&self) -> FilterKind {
        self.config.kind
    }

    pub fn predict(&mut self, dt: f64) {
        let model = make_process_model(dt, &self.config.process);
        let (x, p) = kf_predict(&self.x, &self.p, &model);
        self.x = x;
        self.p = p;
    }

    /// Predicted pseudoranges at the current estimate.
    pub fn predicted_ranges(&self, sats: &[SatelliteState]) -> DVector<f64> {
        predict_pseudoranges(&self.x, sats)
    }

    /// Update with the valid entries of `set`. `sats` must contain every
    /// satellite referenced by a valid entry. On error the state is left as
    /// the prior and the outcome carries the error.
    pub fn update(&mut self, set: &MeasurementSet, sats: &[SatelliteState]) -> UpdateOutcome {
        let mut used = Vec::new();
        let mut residuals = Vec::new();
        let mut variances = Vec::new();
        for e in set.valid() {
            if let Some(s) = sats.iter().find(|s| s.sv_id == e.sv_id) {
                used.push(s.clone());
                residuals.push(e.residual);
                variances.push(e.variance);
            }
        }
        if used.is_empty() {
            return UpdateOutcome::default();
        }
        let dims = used.len();
        let y = DVector::from_vec(residuals);
        let result = match self.config.kind {
            FilterKind::Ekf => {
                measurement_model(&self.x, &used, &variances).and_then(|mm| ekf_update(&self.x, &self.p, &y, &mm))
            }
            FilterKind::Ukf => {
                let r = DMatrix::from_diagonal(&DVector::from_vec(variances));
                ukf_update_deviations(
                    &self.x,
                    &self.p,
                    &y,
                    |d| pseudorange_deviations(&self.x, d, &used),
                    &r,
                    &self.config.ukf,
                )
            }
        };
        match result {
            Ok(u) => {
                self.x = u.x;
                self.p = u.p;
                UpdateOutcome {
                    applied: true,
                    psd_repair: u.psd_repaired,
                    failed: None,
                    nis: Some(u.nis),
                    dims,
                }
            }
            Err(e) => UpdateOutcome {
                applied: false,
                psd_repair: false,
                failed: Some(e),
                nis: None,
                dims,
            },
        }
    }
}
