use nalgebra::{DMatrix, DVector};

use super::{FilterConfig, NavState, STATE_DIM};
use crate::rng::{normal, SimRng};

/// Initial estimate and covariance. Consumes exactly eight normal draws
/// (position xyz, velocity xyz, clock bias, clock drift) whether or not the
/// perturbation is applied.
pub fn initialize_filter(cfg: &FilterConfig, truth: &NavState, rng: &mut SimRng) -> (DVector<f64>, DMatrix<f64>) {
    let init = &cfg.init;
    let sigmas = [
        init.pos_sigma_m,
        init.pos_sigma_m,
        init.pos_sigma_m,
        init.vel_sigma_mps,
        init.vel_sigma_mps,
        init.vel_sigma_mps,
        init.clk_sigma_m,
        init.drift_sigma_mps,
    ];
    let draws: Vec<f64> = (0..STATE_DIM).map(|_| normal(rng)).collect();
    let mut x = truth.to_vector();
    if init.perturb {
        for i in 0..STATE_DIM {
            x[i] += sigmas[i] * draws[i];
        }
    }
    let p = DMatrix::from_diagonal(&DVector::from_iterator(STATE_DIM, sigmas.iter().map(|s| s * s)));
    (x, p)
}
