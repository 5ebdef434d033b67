//! Datasets, synthetic bandlimited signals and the one-step-ahead
//! Monte-Carlo protocol.
//!
//! Every trial draws fresh noise from a seed derived from `(run seed, trial
//! index)`. All estimators see the same noise realisation in a given trial,
//! and results are reduced in trial-index order, so a report is a pure
//! function of its configuration no matter how trials are scheduled.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::estimators::{
    diffusion_init, AggregatorKind, ErrorMode, Estimator, EstimatorConfig, GsampConfig, Setup,
};
use crate::graph::{build_knn_graph, GeoPoint, Graph};
use crate::linalg::Matrix;
use crate::noise::{SasParams, SasSampler, Seed};
use crate::sampling::{greedy_select, ObservationMask};
use crate::spectral::{eigendecompose, passband_len, EigenBasis};

/// Per-step MSE values above this (or non-finite) are replaced by it and flagged.
pub const MSE_CEILING: f64 = 1e12;

/// Graph signal over time: `signal[(i, t)]` is node `i` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub coords: Vec<GeoPoint>,
    pub signal: Matrix,
}

impl Dataset {
    pub fn new(name: impl Into<String>, coords: Vec<GeoPoint>, signal: Matrix) -> Result<Self> {
        if coords.len() != signal.rows() {
            return Err(Error::invalid(format!(
                "{} stations but {} signal rows",
                coords.len(),
                signal.rows()
            )));
        }
        if signal.cols() < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 time steps, got {}",
                signal.cols()
            )));
        }
        if let Some(pos) = signal.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite signal value at row {}, column {}",
                pos / signal.cols(),
                pos % signal.cols()
            )));
        }
        Ok(Dataset {
            name: name.into(),
            coords,
            signal,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.signal.rows()
    }

    pub fn n_steps(&self) -> usize {
        self.signal.cols()
    }

    /// `x[t]` as a vector over nodes.
    pub fn at(&self, t: usize) -> Vec<f64> {
        self.signal.column(t)
    }
}

/// Shape of a synthetic bandlimited signal
/// `x[t] = U_F (a cos(omega t + phi) + b)`.
///
/// Amplitudes are in node units: coefficients are scaled by `sqrt(N / F)` so a
/// typical node swings by about `amplitude`. `level` is added to the DC
/// component as a per-node mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub bandwidth: usize,
    pub omega: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub level: f64,
}

impl SynthSpec {
    pub fn with_bandwidth(bandwidth: usize) -> Self {
        SynthSpec {
            bandwidth,
            omega: 2.0 * PI / 24.0,
            amplitude: 3.0,
            offset: 2.0,
            level: 8.0,
        }
    }
}

struct UnitStream(ChaCha8Rng);

impl UnitStream {
    fn new(seed: Seed) -> Self {
        UnitStream(ChaCha8Rng::seed_from_u64(seed.0))
    }

    fn next(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// `n` distinct station-like coordinates in a continental box.
pub fn synth_points(n: usize, seed: Seed) -> Vec<GeoPoint> {
    let mut rng = UnitStream::new(seed.derive(0x706f_696e_7473));
    let mut out: Vec<GeoPoint> = Vec::with_capacity(n);
    while out.len() < n {
        let lat = 25.0 + 24.0 * rng.next();
        let lon = -125.0 + 58.0 * rng.next();
        let p = GeoPoint::new(lat, lon).expect("box lies inside valid ranges");
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

pub fn synth_dataset(
    coords: Vec<GeoPoint>,
    basis: &EigenBasis,
    steps: usize,
    seed: Seed,
    spec: &SynthSpec,
) -> Result<Dataset> {
    let n = basis.len();
    if steps < 2 {
        return Err(Error::invalid(format!("need at least 2 time steps, got {steps}")));
    }
    if spec.bandwidth == 0 || spec.bandwidth > n {
        return Err(Error::invalid(format!(
            "bandwidth must satisfy 1 <= F <= {n}, got {}",
            spec.bandwidth
        )));
    }
    let f = spec.bandwidth;
    let scale = libm::sqrt(n as f64 / f as f64);
    let mut rng = UnitStream::new(seed.derive(0x7369_676e_616c));
    let comps: Vec<(f64, f64, f64)> = (0..f)
        .map(|k| {
            let a = spec.amplitude * scale * (0.5 + 0.5 * rng.next());
            let phi = 2.0 * PI * rng.next();
            let mut b = spec.offset * scale * (2.0 * rng.next() - 1.0);
            if k == 0 {
                b += spec.level * libm::sqrt(n as f64);
            }
            (a, phi, b)
        })
        .collect();
    let u = &basis.eigenvectors;
    let mut signal = Matrix::zeros(n, steps);
    for t in 0..steps {
        let coeffs: Vec<f64> = comps
            .iter()
            .map(|&(a, phi, b)| a * libm::cos(spec.omega * t as f64 + phi) + b)
            .collect();
        for i in 0..n {
            signal[(i, t)] = (0..f).map(|k| u[(i, k)] * coeffs[k]).sum();
        }
    }
    Dataset::new("synthetic", coords, signal)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedEstimator {
    pub name: String,
    pub config: EstimatorConfig,
}

impl NamedEstimator {
    pub fn new(name: impl Into<String>, config: EstimatorConfig) -> Self {
        NamedEstimator {
            name: name.into(),
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Neighbours per node in the k-NN topology.
    pub k: usize,
    pub observed: usize,
    /// Eigenvectors used by greedy sampling; `None` means `ceil(cutoff_ratio * N)`.
    pub bandwidth: Option<usize>,
    pub noise: SasParams,
    pub trials: usize,
    pub estimators: Vec<NamedEstimator>,
    pub seed: Seed,
    pub cutoff_ratio: f64,
    /// Passband fraction of each local spectrum; defaults to `cutoff_ratio`.
    pub local_ratio: Option<f64>,
    /// Pinned observation set; replaces greedy sampling when present.
    pub mask: Option<ObservationMask>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.estimators.is_empty() {
            return Err(Error::invalid("at least one estimator is required"));
        }
        self.noise.validate()?;
        for e in &self.estimators {
            e.config.validate()?;
        }
        Ok(())
    }

    pub fn effective_bandwidth(&self, n: usize) -> usize {
        self.bandwidth
            .unwrap_or_else(|| passband_len(n, self.cutoff_ratio))
    }
}

/// Builds graph, spectrum, mask and operators for `dataset` under `config`.
pub fn prepare(config: &RunConfig, dataset: &Dataset) -> Result<Setup> {
    config.validate()?;
    let graph = build_knn_graph(&dataset.coords, config.k)?;
    let basis = eigendecompose(&graph.laplacian())?;
    let n = graph.n_nodes();
    let mask = match &config.mask {
        Some(m) if m.len() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.len(),
            })
        }
        Some(m) => m.clone(),
        None => {
            let f = config.effective_bandwidth(n);
            greedy_select(&basis, config.observed, f)?
        }
    };
    let orders: Vec<usize> = config
        .estimators
        .iter()
        .filter_map(|e| e.config.chebyshev_order())
        .collect();
    Setup::with_basis(
        graph,
        mask,
        basis,
        config.cutoff_ratio,
        config.local_ratio.unwrap_or(config.cutoff_ratio),
        &orders,
    )
}

/// `(1/N) sum_i (x_i - xhat_i)^2`.
pub fn mse(x: &[f64], xhat: &[f64]) -> f64 {
    let s: f64 = x.iter().zip(xhat).map(|(a, b)| (a - b) * (a - b)).sum();
    s / x.len() as f64
}

/// Why part of a trial trajectory was capped.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialFlag {
    pub trial: usize,
    /// Time index (into the returned trajectory's time axis) of the first capped value.
    pub t: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub mse: Vec<f64>,
    pub flag: Option<TrialFlag>,
}

fn trial_noise(noise: SasParams, seed: Seed, trial: usize) -> Result<SasSampler> {
    SasSampler::new(noise, seed.derive(trial as u64))
}

/// Runs one trial and returns MSE for `t = 1 ..= T-1`.
///
/// `xhat[0]` comes from [`diffusion_init`] on `y[0]`; at each step
/// `y[t] = M_S (x[t] + eps[t])` updates the estimate to `xhat[t+1]`, which is
/// scored against the clean `x[t+1]`.
pub fn run_trial(
    dataset: &Dataset,
    setup: &Setup,
    noise: SasParams,
    estimator: &NamedEstimator,
    seed: Seed,
) -> Result<Vec<f64>> {
    let sampler = SasSampler::new(noise, seed)?;
    let (mse, failure) = simulate(dataset, setup, sampler, &estimator.config);
    match failure {
        Some((t, e)) => Err(Error::Trial {
            estimator: estimator.name.clone(),
            t,
            source: Box::new(e),
        }),
        None => Ok(mse),
    }
}

/// Trajectory up to the first failure plus the failing time index and error.
fn simulate(
    dataset: &Dataset,
    setup: &Setup,
    mut sampler: SasSampler,
    config: &EstimatorConfig,
) -> (Vec<f64>, Option<(usize, Error)>) {
    let n = dataset.n_nodes();
    let steps = dataset.n_steps();
    let mut trajectory = Vec::with_capacity(steps - 1);
    let mut eps = vec![0.0; n];

    let mut observe = |t: usize| -> Result<Vec<f64>> {
        sampler.fill(&mut eps);
        let noisy: Vec<f64> = dataset
            .at(t)
            .iter()
            .zip(&eps)
            .map(|(x, e)| x + e)
            .collect();
        setup.mask.apply(&noisy)
    };

    let y0 = match observe(0) {
        Ok(y) => y,
        Err(e) => return (trajectory, Some((0, e))),
    };
    let init = match diffusion_init(&setup.graph, &setup.mask, &y0) {
        Ok(x) => x,
        Err(e) => return (trajectory, Some((0, e))),
    };
    let mut est = match Estimator::new(setup, config.clone(), init) {
        Ok(e) => e,
        Err(e) => return (trajectory, Some((0, e))),
    };
    let mut y = y0;
    for t in 0..steps - 1 {
        if t > 0 {
            y = match observe(t) {
                Ok(y) => y,
                Err(e) => return (trajectory, Some((t, e))),
            };
        }
        if let Err(e) = est.step(&y) {
            return (trajectory, Some((t, e)));
        }
        trajectory.push(mse(&dataset.at(t + 1), est.estimate()));
    }
    (trajectory, None)
}

/// One Monte-Carlo trial with divergence capping; never fails.
pub fn capped_trial(
    dataset: &Dataset,
    setup: &Setup,
    config: &RunConfig,
    estimator: usize,
    trial: usize,
) -> TrialResult {
    let len = dataset.n_steps() - 1;
    let est = &config.estimators[estimator];
    let sampler = match trial_noise(config.noise, config.seed, trial) {
        Ok(s) => s,
        Err(e) => {
            return TrialResult {
                mse: vec![MSE_CEILING; len],
                flag: Some(TrialFlag {
                    trial,
                    t: 0,
                    reason: e.to_string(),
                }),
            }
        }
    };
    let (mut mse, failure) = simulate(dataset, setup, sampler, &est.config);
    let mut flag = failure.map(|(t, e)| TrialFlag {
        trial,
        t,
        reason: format!("failed: {e}"),
    });
    for (t, v) in mse.iter_mut().enumerate() {
        if !v.is_finite() || *v > MSE_CEILING {
            *v = MSE_CEILING;
            if flag.is_none() {
                flag = Some(TrialFlag {
                    trial,
                    t,
                    reason: format!("diverged: MSE capped at {MSE_CEILING:e}"),
                });
            }
        }
    }
    mse.resize(len, MSE_CEILING);
    TrialResult { mse, flag }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub name: String,
    /// Mean over trials of MSE at `t = 1 ..= T-1`.
    pub mse_mean: Vec<f64>,
    pub avg_mse: f64,
    pub flags: Vec<TrialFlag>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseReport {
    pub estimators: Vec<EstimatorReport>,
    /// `(key, value)` pairs describing the run, in insertion order.
    pub metadata: Vec<(String, String)>,
}

impl MseReport {
    pub fn get(&self, name: &str) -> Option<&EstimatorReport> {
        self.estimators.iter().find(|e| e.name == name)
    }
}

/// Combines per-trial results (`results[estimator][trial]`) in trial order.
pub fn reduce(config: &RunConfig, results: Vec<Vec<TrialResult>>) -> MseReport {
    let estimators = config
        .estimators
        .iter()
        .zip(results)
        .map(|(est, trials)| {
            let len = trials.first().map_or(0, |t| t.mse.len());
            let mut sum = vec![0.0; len];
            let mut flags = Vec::new();
            for tr in &trials {
                for (s, v) in sum.iter_mut().zip(&tr.mse) {
                    *s += v;
                }
                if let Some(f) = &tr.flag {
                    flags.push(f.clone());
                }
            }
            let r = trials.len() as f64;
            let mse_mean: Vec<f64> = sum.into_iter().map(|s| s / r).collect();
            let avg_mse = mse_mean.iter().sum::<f64>() / mse_mean.len().max(1) as f64;
            EstimatorReport {
                name: est.name.clone(),
                mse_mean,
                avg_mse,
                flags,
            }
        })
        .collect();
    MseReport {
        estimators,
        metadata: metadata(config),
    }
}

pub fn metadata(config: &RunConfig) -> Vec<(String, String)> {
    vec![
        ("seed".into(), format!("{}", config.seed.0)),
        ("rng".into(), crate::noise::RNG_NAME.into()),
        ("trials".into(), format!("{}", config.trials)),
        (
            "noise".into(),
            format!(
                "alpha={} gamma={} mu={}",
                config.noise.alpha, config.noise.gamma, config.noise.mu
            ),
        ),
        ("k".into(), format!("{}", config.k)),
        ("observed".into(), format!("{}", config.observed)),
        ("cutoff_ratio".into(), format!("{}", config.cutoff_ratio)),
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
    ]
}

/// Sequential Monte-Carlo over every estimator and trial.
pub fn monte_carlo(config: &RunConfig, dataset: &Dataset) -> Result<MseReport> {
    let setup = prepare(config, dataset)?;
    Ok(monte_carlo_with_setup(config, dataset, &setup))
}

pub fn monte_carlo_with_setup(config: &RunConfig, dataset: &Dataset, setup: &Setup) -> MseReport {
    let results = (0..config.estimators.len())
        .map(|e| {
            (0..config.trials)
                .map(|r| capped_trial(dataset, setup, config, e, r))
                .collect()
        })
        .collect();
    reduce(config, results)
}

/// Chebyshev order used by the diffusion baselines unless configured.
pub const DEFAULT_CHEBYSHEV_ORDER: usize = 20;

/// The seven estimators of the reference comparison with their reference
/// weights and step sizes. `mode` selects LMS or sign updates for the
/// message passing entries.
pub fn reference_estimators(mode: ErrorMode, chebyshev_order: usize) -> Vec<NamedEstimator> {
    let gsamp = |agg, w| EstimatorConfig::Gsamp(GsampConfig::new(mode, agg, w));
    vec![
        NamedEstimator::new("gsamp-sum", gsamp(AggregatorKind::Sum, [1.0, 0.0, 2.0, 0.0])),
        NamedEstimator::new("gsamp-median", gsamp(AggregatorKind::Median, [0.7, 0.0, 0.7, 0.0])),
        NamedEstimator::new("gsamp-smooth", gsamp(AggregatorKind::Smooth, [0.7, 0.0, 1.95, 0.0])),
        NamedEstimator::new("glms", EstimatorConfig::Glms { step_size: 1.6 }),
        NamedEstimator::new("g-sign", EstimatorConfig::GSign { step_size: 1.3 }),
        NamedEstimator::new(
            "gdlms",
            EstimatorConfig::Gdlms {
                step_size: 1.6,
                order: chebyshev_order,
            },
        ),
        NamedEstimator::new(
            "gsd",
            EstimatorConfig::Gsd {
                step_size: 1.6,
                order: chebyshev_order,
            },
        ),
    ]
}

/// Builds the synthetic surrogate used by tests and the CLI: random
/// coordinates, their k-NN graph and a bandlimited signal on it.
pub fn synthetic_problem(
    n: usize,
    steps: usize,
    k: usize,
    seed: Seed,
    spec: &SynthSpec,
) -> Result<(Dataset, Graph, EigenBasis)> {
    let coords = synth_points(n, seed);
    let graph = build_knn_graph(&coords, k)?;
    let basis = eigendecompose(&graph.laplacian())?;
    let data = synth_dataset(coords, &basis, steps, seed, spec)?;
    Ok((data, graph, basis))
}
