use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::run_scenario;
use super::summary::RunSummary;
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub median: f64,
    pub mean: f64,
    /// Sample standard deviation (n - 1); zero for a single run.
    pub std: f64,
}

impl Aggregate {
    /// Order-independent: values are sorted before any reduction.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { median, mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub base_seed: u64,
    pub runs_requested: usize,
    /// Successful runs in seed order.
    pub runs: Vec<RunSummary>,
    pub failures: Vec<RunFailure>,
    /// Keyed by summary field: rmse_east, rmse_north, rmse_up, rmse_3d,
    /// max_error_3d.
    pub aggregates: BTreeMap<String, Aggregate>,
}

pub fn aggregate(runs: &[RunSummary]) -> BTreeMap<String, Aggregate> {
    type Field = (&'static str, fn(&RunSummary) -> f64);
    let fields: [Field; 5] = [
        ("rmse_east", |s| s.rmse_east),
        ("rmse_north", |s| s.rmse_north),
        ("rmse_up", |s| s.rmse_up),
        ("rmse_3d", |s| s.rmse_3d),
        ("max_error_3d", |s| s.max_error_3d),
    ];
    let mut out = BTreeMap::new();
    for (name, get) in fields {
        let values: Vec<f64> = runs.iter().map(get).collect();
        if let Some(a) = Aggregate::of(&values) {
            out.insert(name.to_string(), a);
        }
    }
    out
}

/// Runs `runs` copies of `cfg` with seeds `base_seed + i` on up to `jobs`
/// threads (0 lets rayon decide).
pub fn monte_carlo(cfg: &ScenarioConfig, runs: usize, base_seed: u64, jobs: usize) -> MonteCarloReport {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    let results: Vec<(u64, Result<RunSummary, String>)> = pool.install(|| {
        (0..runs)
            .into_par_iter()
            .map(|i| {
                let seed = base_seed.wrapping_add(i as u64);
                let mut c = cfg.clone();
                c.seed = seed;
                (seed, run_scenario(&c).map(|(_, s)| s).map_err(|e| e.to_string()))
            })
            .collect()
    });
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(s) => ok.push(s),
            Err(error) => failures.push(RunFailure { seed, error }),
        }
    }
    MonteCarloReport {
        base_seed,
        runs_requested: runs,
        aggregates: aggregate(&ok),
        runs: ok,
        failures,
    }
}
