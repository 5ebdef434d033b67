//! Experiment configuration: a `key = value` file in TOML syntax.
//!
//! ```toml
//! seed = 7
//! trials = 100
//! k = 5
//! observed = 40
//! cutoff_ratio = 0.4
//!
//! [noise]
//! alpha = 1.3
//! gamma = 0.1
//!
//! [synthetic]
//! nodes = 60
//! steps = 95
//!
//! [[estimator]]
//! name = "gsamp-sum"
//! kind = "gsamp"
//! mode = "auto"
//! aggregator = "sum"
//! weights = [1.0, 0.0, 2.0, 0.0]
//!
//! [[estimator]]
//! kind = "glms"
//! step_size = 1.6
//!
//! [table1]
//! noise = [{ alpha = 2.0, gamma = 0.1 }, { alpha = 1.3, gamma = 0.1 }]
//! ```
//!
//! Every key is optional. Unknown keys and keys that do not apply to an
//! estimator's `kind` are rejected with the line they appear on. Without any
//! `[[estimator]]` entry the seven reference estimators are used.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use gsamp_core::estimators::GsampConfig;
use gsamp_core::experiment::{reference_estimators, NamedEstimator, DEFAULT_CHEBYSHEV_ORDER};
use gsamp_core::{AggregatorKind, ErrorMode, EstimatorConfig, ObservationMask, RunConfig, SasParams, Seed, SynthSpec};
use serde::Deserialize;
use toml::Spanned;

use crate::error::{ConfigError, Error, Result};

/// Observed nodes per node in the reference setup (130 of 197).
const OBSERVED_NUM: usize = 130;
const OBSERVED_DEN: usize = 197;

/// The six noise settings of the reference comparison.
pub fn reference_noise_grid() -> Vec<SasParams> {
    [(2.0, 0.1), (2.0, 0.15), (2.0, 0.2), (1.3, 0.1), (1.3, 0.15), (1.3, 0.2)]
        .into_iter()
        .map(|(a, g)| SasParams::new(a, g, 0.0).expect("reference settings are valid"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeChoice {
    Lms,
    Sign,
    /// LMS under Gaussian noise, sign updates otherwise.
    Auto,
}

impl ModeChoice {
    pub fn resolve(self, noise: &SasParams) -> ErrorMode {
        match self {
            ModeChoice::Lms => ErrorMode::Lms,
            ModeChoice::Sign => ErrorMode::Sign,
            ModeChoice::Auto if noise.is_gaussian() => ErrorMode::Lms,
            ModeChoice::Auto => ErrorMode::Sign,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Kind {
    Gsamp,
    Glms,
    GSign,
    Gdlms,
    Gsd,
}

impl Kind {
    fn label(self) -> &'static str {
        match self {
            Kind::Gsamp => "gsamp",
            Kind::Glms => "glms",
            Kind::GSign => "g-sign",
            Kind::Gdlms => "gdlms",
            Kind::Gsd => "gsd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Aggregator {
    Sum,
    Median,
    Smooth,
    Global,
}

impl Aggregator {
    fn kind(self) -> AggregatorKind {
        match self {
            Aggregator::Sum => AggregatorKind::Sum,
            Aggregator::Median => AggregatorKind::Median,
            Aggregator::Smooth => AggregatorKind::Smooth,
            Aggregator::Global => AggregatorKind::Global,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Aggregator::Sum => "sum",
            Aggregator::Median => "median",
            Aggregator::Smooth => "smooth",
            Aggregator::Global => "global",
        }
    }

    fn default_weights(self) -> [f64; 4] {
        match self {
            Aggregator::Sum => [1.0, 0.0, 2.0, 0.0],
            Aggregator::Median => [0.7, 0.0, 0.7, 0.0],
            Aggregator::Smooth => [0.7, 0.0, 1.95, 0.0],
            Aggregator::Global => [1.0, 1.0, 1.0, 1.0],
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    alpha: Option<f64>,
    gamma: Option<f64>,
    mu: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSynthetic {
    nodes: Option<usize>,
    steps: Option<usize>,
    bandwidth: Option<usize>,
    omega: Option<f64>,
    amplitude: Option<f64>,
    offset: Option<f64>,
    level: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimator {
    name: Option<String>,
    kind: Kind,
    mode: Option<ModeChoice>,
    aggregator: Option<Aggregator>,
    weights: Option<Vec<f64>>,
    khop: Option<usize>,
    degree_normalized: Option<bool>,
    stability_guard: Option<bool>,
    step_size: Option<f64>,
    order: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable1 {
    noise: Vec<Spanned<RawNoise>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    trials: Option<usize>,
    k: Option<usize>,
    observed: Option<usize>,
    bandwidth: Option<usize>,
    cutoff_ratio: Option<f64>,
    local_ratio: Option<f64>,
    mask: Option<PathBuf>,
    noise: Option<Spanned<RawNoise>>,
    synthetic: Option<RawSynthetic>,
    #[serde(default)]
    estimator: Vec<Spanned<RawEstimator>>,
    table1: Option<RawTable1>,
}

/// One estimator entry with its error mode left open until the noise is known.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorEntry {
    pub name: String,
    pub mode: ModeChoice,
    /// Template; for message passing estimators `mode` overrides its error mode.
    pub config: EstimatorConfig,
}

impl EstimatorEntry {
    pub fn resolve(&self, noise: &SasParams) -> NamedEstimator {
        let mut config = self.config.clone();
        if let EstimatorConfig::Gsamp(g) = &mut config {
            g.mode = self.mode.resolve(noise);
        }
        NamedEstimator::new(self.name.clone(), config)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub nodes: usize,
    pub steps: usize,
    /// `None` uses the run's effective bandwidth.
    pub bandwidth: Option<usize>,
    pub omega: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub level: f64,
}

impl SyntheticConfig {
    pub fn spec(&self, bandwidth: usize) -> SynthSpec {
        SynthSpec {
            bandwidth: self.bandwidth.unwrap_or(bandwidth),
            omega: self.omega,
            amplitude: self.amplitude,
            offset: self.offset,
            level: self.level,
        }
    }
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let s = SynthSpec::with_bandwidth(1);
        SyntheticConfig {
            nodes: 60,
            steps: 95,
            bandwidth: None,
            omega: s.omega,
            amplitude: s.amplitude,
            offset: s.offset,
            level: s.level,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub trials: usize,
    pub k: usize,
    /// `None` keeps the reference ratio of 130 observed out of 197.
    pub observed: Option<usize>,
    pub bandwidth: Option<usize>,
    pub cutoff_ratio: f64,
    pub local_ratio: Option<f64>,
    /// Pinned mask file, resolved relative to the config file.
    pub mask: Option<PathBuf>,
    pub noise: SasParams,
    pub synthetic: SyntheticConfig,
    pub estimators: Vec<EstimatorEntry>,
    pub table1: Vec<SasParams>,
    /// The text the config was parsed from, echoed into report metadata.
    pub source: String,
}

impl Default for Config {
    fn default() -> Self {
        Config::parse("", None).expect("empty config is valid")
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = ...` in the table whose header starts at `header`, or of
/// the header itself if the key is absent.
fn key_line(text: &str, header: usize, key: &str) -> usize {
    let start = header.min(text.len());
    let mut offset = start;
    for (i, l) in text[start..].split_inclusive('\n').enumerate() {
        let trimmed = l.trim_start();
        if i > 0 && trimmed.starts_with('[') {
            break;
        }
        if let Some(rest) = trimmed.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                return line_of(text, offset);
            }
        }
        offset += l.len();
    }
    line_of(text, start)
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::parse(&text, Some(path))
    }

    pub fn parse(text: &str, path: Option<&Path>) -> Result<Config> {
        let fail = |line: Option<usize>, message: String| {
            Error::Config(ConfigError {
                path: path.map(Path::to_path_buf),
                line,
                message,
            })
        };
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            fail(line, e.message().to_string())
        })?;

        let noise = match &raw.noise {
            Some(n) => resolve_noise(n.get_ref())
                .map_err(|m| fail(Some(line_of(text, n.span().start)), m))?,
            None => SasParams::new(2.0, 0.1, 0.0).expect("default noise is valid"),
        };

        let mut estimators = Vec::with_capacity(raw.estimator.len());
        let mut names = BTreeSet::new();
        for entry in &raw.estimator {
            let line = line_of(text, entry.span().start);
            let e = resolve_estimator(entry.get_ref()).map_err(|(key, m)| {
                let line = key.map_or(line, |k| key_line(text, entry.span().start, k));
                fail(Some(line), m)
            })?;
            if !names.insert(e.name.clone()) {
                return Err(fail(Some(line), format!("duplicate estimator name `{}`", e.name)));
            }
            estimators.push(e);
        }
        if estimators.is_empty() {
            estimators = reference_entries();
        }

        let table1 = match &raw.table1 {
            Some(t) if t.noise.is_empty() => {
                return Err(fail(None, "table1.noise must list at least one setting".into()))
            }
            Some(t) => t
                .noise
                .iter()
                .map(|n| {
                    resolve_noise(n.get_ref()).map_err(|m| fail(Some(line_of(text, n.span().start)), m))
                })
                .collect::<Result<Vec<_>>>()?,
            None => reference_noise_grid(),
        };

        let s = raw.synthetic.unwrap_or_default();
        let d = SyntheticConfig::default();
        let synthetic = SyntheticConfig {
            nodes: s.nodes.unwrap_or(d.nodes),
            steps: s.steps.unwrap_or(d.steps),
            bandwidth: s.bandwidth,
            omega: s.omega.unwrap_or(d.omega),
            amplitude: s.amplitude.unwrap_or(d.amplitude),
            offset: s.offset.unwrap_or(d.offset),
            level: s.level.unwrap_or(d.level),
        };

        let base = path.and_then(Path::parent).unwrap_or(Path::new(""));
        let config = Config {
            seed: raw.seed.unwrap_or(1),
            trials: raw.trials.unwrap_or(100),
            k: raw.k.unwrap_or(5),
            observed: raw.observed,
            bandwidth: raw.bandwidth,
            cutoff_ratio: raw.cutoff_ratio.unwrap_or(0.4),
            local_ratio: raw.local_ratio,
            mask: raw.mask.map(|m| base.join(m)),
            noise,
            synthetic,
            estimators,
            table1,
            source: text.to_string(),
        };
        config.check().map_err(|m| fail(None, m))?;
        Ok(config)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.trials == 0 {
            return Err("trials must be at least 1".into());
        }
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        if !(self.cutoff_ratio > 0.0 && self.cutoff_ratio <= 1.0) {
            return Err(format!("cutoff_ratio must lie in (0, 1], got {}", self.cutoff_ratio));
        }
        if let Some(r) = self.local_ratio {
            if !(r > 0.0 && r <= 1.0) {
                return Err(format!("local_ratio must lie in (0, 1], got {r}"));
            }
        }
        if self.synthetic.nodes < 2 {
            return Err("synthetic.nodes must be at least 2".into());
        }
        if self.synthetic.steps < 2 {
            return Err(format!("synthetic.steps must be at least 2, got {}", self.synthetic.steps));
        }
        Ok(())
    }

    /// Observed count for an `n`-node dataset.
    pub fn observed_for(&self, n: usize) -> usize {
        self.observed
            .unwrap_or_else(|| ((OBSERVED_NUM * n + OBSERVED_DEN / 2) / OBSERVED_DEN).clamp(1, n))
    }

    /// Concrete run configuration for `n` nodes under `noise`.
    pub fn run_config(&self, n: usize, noise: SasParams, mask: Option<ObservationMask>) -> RunConfig {
        RunConfig {
            k: self.k,
            observed: self.observed_for(n),
            bandwidth: self.bandwidth,
            noise,
            trials: self.trials,
            estimators: self.estimators.iter().map(|e| e.resolve(&noise)).collect(),
            seed: Seed(self.seed),
            cutoff_ratio: self.cutoff_ratio,
            local_ratio: self.local_ratio,
            mask,
        }
    }
}

fn reference_entries() -> Vec<EstimatorEntry> {
    reference_estimators(ErrorMode::Lms, DEFAULT_CHEBYSHEV_ORDER)
        .into_iter()
        .map(|e| EstimatorEntry {
            name: e.name,
            mode: ModeChoice::Auto,
            config: e.config,
        })
        .collect()
}

fn resolve_noise(n: &RawNoise) -> std::result::Result<SasParams, String> {
    SasParams::new(n.alpha.unwrap_or(2.0), n.gamma.unwrap_or(0.1), n.mu.unwrap_or(0.0))
        .map_err(|e| e.to_string())
}

/// Errors carry the offending key when there is one.
type EntryResult<T> = std::result::Result<T, (Option<&'static str>, String)>;

fn resolve_estimator(raw: &RawEstimator) -> EntryResult<EstimatorEntry> {
    let kind = raw.kind;
    let present = |field: &'static str, set: bool| -> EntryResult<()> {
        if set {
            Err((Some(field), format!("key `{field}` does not apply to kind `{}`", kind.label())))
        } else {
            Ok(())
        }
    };
    let gsamp_only = [
        ("mode", raw.mode.is_some()),
        ("aggregator", raw.aggregator.is_some()),
        ("weights", raw.weights.is_some()),
        ("khop", raw.khop.is_some()),
        ("degree_normalized", raw.degree_normalized.is_some()),
        ("stability_guard", raw.stability_guard.is_some()),
    ];
    let (config, default_name) = match kind {
        Kind::Gsamp => {
            present("step_size", raw.step_size.is_some())?;
            present("order", raw.order.is_some())?;
            let agg = raw.aggregator.unwrap_or(Aggregator::Sum);
            let w = match &raw.weights {
                Some(w) if w.len() == 4 => [w[0], w[1], w[2], w[3]],
                Some(w) => return Err((Some("weights"), format!("weights needs 4 values, got {}", w.len()))),
                None => agg.default_weights(),
            };
            let mut g = GsampConfig::new(ErrorMode::Lms, agg.kind(), w);
            g.weights.degree_normalized = raw.degree_normalized.unwrap_or(false);
            g.khop = raw.khop.unwrap_or(1);
            g.stability_guard = raw.stability_guard.unwrap_or(false);
            (EstimatorConfig::Gsamp(g), format!("gsamp-{}", agg.label()))
        }
        Kind::Glms | Kind::GSign => {
            for (f, set) in gsamp_only {
                present(f, set)?;
            }
            present("order", raw.order.is_some())?;
            let c = if kind == Kind::Glms {
                EstimatorConfig::Glms {
                    step_size: raw.step_size.unwrap_or(1.6),
                }
            } else {
                EstimatorConfig::GSign {
                    step_size: raw.step_size.unwrap_or(1.3),
                }
            };
            (c, kind.label().to_string())
        }
        Kind::Gdlms | Kind::Gsd => {
            for (f, set) in gsamp_only {
                present(f, set)?;
            }
            let step_size = raw.step_size.unwrap_or(1.6);
            let order = raw.order.unwrap_or(DEFAULT_CHEBYSHEV_ORDER);
            let c = if kind == Kind::Gdlms {
                EstimatorConfig::Gdlms { step_size, order }
            } else {
                EstimatorConfig::Gsd { step_size, order }
            };
            (c, kind.label().to_string())
        }
    };
    config.validate().map_err(|e| (None, e.to_string()))?;
    Ok(EstimatorEntry {
        name: raw.name.clone().unwrap_or(default_name),
        mode: raw.mode.unwrap_or(ModeChoice::Auto),
        config,
    })
}
