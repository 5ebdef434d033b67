//! Multi-threaded Monte-Carlo. Every `(estimator, trial)` pair is an
//! independent job with a pre-assigned noise seed; results are collected in
//! index order and reduced exactly like the sequential driver, so reports are
//! bitwise identical for any thread count.

use gsamp_core::estimators::Setup;
use gsamp_core::experiment::{capped_trial, reduce, TrialResult};
use gsamp_core::{Dataset, MseReport, RunConfig};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// `threads = None` lets rayon pick one worker per core.
pub fn monte_carlo(
    config: &RunConfig,
    dataset: &Dataset,
    setup: &Setup,
    threads: Option<usize>,
) -> Result<MseReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    let trials = config.trials;
    let jobs: Vec<(usize, usize)> = (0..config.estimators.len())
        .flat_map(|e| (0..trials).map(move |r| (e, r)))
        .collect();
    let flat: Vec<TrialResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(e, r)| capped_trial(dataset, setup, config, e, r))
            .collect()
    });
    let mut it = flat.into_iter();
    let results = (0..config.estimators.len())
        .map(|_| it.by_ref().take(trials).collect())
        .collect();
    Ok(reduce(config, results))
}
