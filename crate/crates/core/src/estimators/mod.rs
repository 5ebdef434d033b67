//! Online estimators sharing one step interface: consume the masked
//! observation `y[t]`, produce `xhat[t+1]`.
//!
//! The message passing family corrects each node with an aggregation of
//! neighbour errors weighted by observation status. The baselines apply one
//! global low-pass operator (exact or Chebyshev) to the error instead.

mod aggregate;
mod init;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

pub use aggregate::{
    aggregate_global, aggregate_median, aggregate_smooth, aggregate_sum, error_signal, median, sign,
};
pub use init::diffusion_init;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::norm_sq;
use crate::sampling::{ObservationMask, WeightClass};
use crate::spectral::{
    chebyshev_operator, eigendecompose, ideal_lowpass_operator, precompute_local_smoothers,
    EigenBasis, FilterOperator, LocalSmoothers,
};

/// Norm of the cost minimised by the update: `p = 2` or `p = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorMode {
    Lms,
    Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregatorKind {
    Sum,
    Median,
    Smooth,
    /// `w1 * B e` with the exact low-pass operator of the setup. Removes all
    /// locality; used to check that the family contains GLMS.
    Global,
}

/// Message weights keyed by [`WeightClass`], stored as `[w1, w2, w3, w4]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightScheme {
    pub w: [f64; 4],
    /// Divide sum-aggregation weights by the receiver degree (mean aggregation).
    pub degree_normalized: bool,
}

impl WeightScheme {
    pub const fn new(w: [f64; 4]) -> Self {
        WeightScheme {
            w,
            degree_normalized: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid(format!("weights must be finite, got {:?}", self.w)));
        }
        Ok(())
    }

    #[inline]
    pub fn weight(&self, class: WeightClass) -> f64 {
        match class {
            WeightClass::W1 => self.w[0],
            WeightClass::W2 => self.w[1],
            WeightClass::W3 => self.w[2],
            WeightClass::W4 => self.w[3],
        }
    }

    /// Weight of the `(v, v)` pair in the smooth aggregation: `w1` or `w4`.
    #[inline]
    pub fn self_weight(&self, v_observed: bool) -> f64 {
        if v_observed {
            self.w[0]
        } else {
            self.w[3]
        }
    }

    /// Scale of the median message at a receiver: `w1` or `w3`.
    #[inline]
    pub fn status_weight(&self, v_observed: bool) -> f64 {
        if v_observed {
            self.w[0]
        } else {
            self.w[2]
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.w.iter().fold(0.0, |m, w| m.max(w.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsampConfig {
    pub mode: ErrorMode,
    pub aggregator: AggregatorKind,
    pub weights: WeightScheme,
    /// Number of aggregation rounds per update.
    pub khop: usize,
    /// Rescale messages so `||m||^2 <= ||xhat||^2`.
    pub stability_guard: bool,
}

impl GsampConfig {
    pub fn new(mode: ErrorMode, aggregator: AggregatorKind, weights: [f64; 4]) -> Self {
        GsampConfig {
            mode,
            aggregator,
            weights: WeightScheme::new(weights),
            khop: 1,
            stability_guard: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorConfig {
    Gsamp(GsampConfig),
    Glms { step_size: f64 },
    GSign { step_size: f64 },
    Gdlms { step_size: f64, order: usize },
    Gsd { step_size: f64, order: usize },
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            EstimatorConfig::Gsamp(c) => {
                c.weights.validate()?;
                if c.khop == 0 {
                    return Err(Error::invalid("khop must be at least 1"));
                }
            }
            EstimatorConfig::Glms { step_size } | EstimatorConfig::GSign { step_size } => {
                check_step(*step_size)?
            }
            EstimatorConfig::Gdlms { step_size, order } | EstimatorConfig::Gsd { step_size, order } => {
                check_step(*step_size)?;
                if *order == 0 {
                    return Err(Error::invalid("Chebyshev order must be at least 1"));
                }
            }
        }
        Ok(())
    }

    pub fn chebyshev_order(&self) -> Option<usize> {
        match self {
            EstimatorConfig::Gdlms { order, .. } | EstimatorConfig::Gsd { order, .. } => Some(*order),
            _ => None,
        }
    }
}

fn check_step(mu: f64) -> Result<()> {
    if !mu.is_finite() {
        return Err(Error::invalid(format!("step size must be finite, got {mu}")));
    }
    Ok(())
}

/// Current estimate and time index.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub estimate: Vec<f64>,
    pub t: usize,
}

impl EstimatorState {
    pub fn new(estimate: Vec<f64>) -> Self {
        EstimatorState { estimate, t: 0 }
    }
}

/// Everything the estimators read but never modify: topology, mask and the
/// precomputed spectral operators.
#[derive(Debug, Clone)]
pub struct Setup {
    pub graph: Graph,
    pub mask: ObservationMask,
    pub basis: EigenBasis,
    pub cutoff_ratio: f64,
    pub lowpass: FilterOperator,
    pub smoothers: LocalSmoothers,
    pub chebyshev: BTreeMap<usize, FilterOperator>,
}

impl Setup {
    /// Decomposes the Laplacian and builds the exact low-pass operator at
    /// `cutoff_ratio`, the local smoothers at `local_ratio` and one
    /// Chebyshev operator per requested order.
    pub fn new(
        graph: Graph,
        mask: ObservationMask,
        cutoff_ratio: f64,
        local_ratio: f64,
        chebyshev_orders: &[usize],
    ) -> Result<Self> {
        let basis = eigendecompose(&graph.laplacian())?;
        Self::with_basis(graph, mask, basis, cutoff_ratio, local_ratio, chebyshev_orders)
    }

    pub fn with_basis(
        graph: Graph,
        mask: ObservationMask,
        basis: EigenBasis,
        cutoff_ratio: f64,
        local_ratio: f64,
        chebyshev_orders: &[usize],
    ) -> Result<Self> {
        if mask.len() != graph.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: graph.n_nodes(),
                got: mask.len(),
            });
        }
        let lowpass = ideal_lowpass_operator(&basis, cutoff_ratio)?;
        let smoothers = precompute_local_smoothers(&graph, local_ratio)?;
        let mut setup = Setup {
            graph,
            mask,
            basis,
            cutoff_ratio,
            lowpass,
            smoothers,
            chebyshev: BTreeMap::new(),
        };
        for &k in chebyshev_orders {
            setup.add_chebyshev(k)?;
        }
        Ok(setup)
    }

    pub fn add_chebyshev(&mut self, order: usize) -> Result<()> {
        if !self.chebyshev.contains_key(&order) {
            let op = chebyshev_operator(
                &self.graph.laplacian(),
                self.basis.lambda_max(),
                self.cutoff_ratio,
                order,
            )?;
            self.chebyshev.insert(order, op);
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    fn chebyshev_op(&self, order: usize) -> Result<&FilterOperator> {
        self.chebyshev.get(&order).ok_or_else(|| {
            Error::Config(format!("no Chebyshev operator of order {order} in the setup"))
        })
    }
}

/// One aggregation round of `kind` applied to `z`.
pub fn aggregate(
    kind: AggregatorKind,
    z: &[f64],
    setup: &Setup,
    scheme: &WeightScheme,
) -> Result<Vec<f64>> {
    match kind {
        AggregatorKind::Sum => Ok(aggregate_sum(z, &setup.graph, &setup.mask, scheme)),
        AggregatorKind::Median => Ok(aggregate_median(z, &setup.graph, &setup.mask, scheme)),
        AggregatorKind::Smooth => {
            aggregate_smooth(z, &setup.graph, &setup.mask, scheme, &setup.smoothers)
        }
        AggregatorKind::Global => aggregate_global(z, scheme, &setup.lowpass),
    }
}

/// The message `m[t]` of a GSAMP configuration for the current estimate,
/// before the stability guard.
pub fn gsamp_message(
    config: &GsampConfig,
    setup: &Setup,
    estimate: &[f64],
    y: &[f64],
) -> Result<Vec<f64>> {
    let mut z = error_signal(config.mode, &setup.mask, y, estimate)?;
    for _ in 0..config.khop {
        z = aggregate(config.aggregator, &z, setup, &config.weights)?;
    }
    Ok(z)
}

/// Scales `m` so that `||m||^2 <= bound_sq`; returns whether it was scaled.
pub fn apply_stability_guard(m: &mut [f64], bound_sq: f64) -> bool {
    let m_sq = norm_sq(m);
    if m_sq <= bound_sq {
        return false;
    }
    let s = libm::sqrt(bound_sq / m_sq);
    m.iter_mut().for_each(|x| *x *= s);
    true
}

/// `xhat[t+1] = xhat[t] + m[t]`.
pub fn gsamp_step(
    config: &GsampConfig,
    setup: &Setup,
    state: &mut EstimatorState,
    y: &[f64],
) -> Result<()> {
    let mut m = gsamp_message(config, setup, &state.estimate, y)?;
    if config.stability_guard {
        let bound = norm_sq(&state.estimate);
        if apply_stability_guard(&mut m, bound) {
            log::debug!("t={}: message rescaled by the stability guard", state.t);
        }
    }
    commit(state, |i, x| x + m[i])
}

/// `xhat[t+1] = xhat[t] + mu * B e[t]` with `e` the masked residual or its sign.
pub fn filtered_step(
    mode: ErrorMode,
    step_size: f64,
    op: &FilterOperator,
    mask: &ObservationMask,
    state: &mut EstimatorState,
    y: &[f64],
) -> Result<()> {
    let e = error_signal(mode, mask, y, &state.estimate)?;
    let be = op.apply(&e)?;
    commit(state, |i, x| x + step_size * be[i])
}

pub fn glms_step(step_size: f64, setup: &Setup, state: &mut EstimatorState, y: &[f64]) -> Result<()> {
    filtered_step(ErrorMode::Lms, step_size, &setup.lowpass, &setup.mask, state, y)
}

pub fn gsign_step(step_size: f64, setup: &Setup, state: &mut EstimatorState, y: &[f64]) -> Result<()> {
    filtered_step(ErrorMode::Sign, step_size, &setup.lowpass, &setup.mask, state, y)
}

pub fn gdlms_step(
    step_size: f64,
    order: usize,
    setup: &Setup,
    state: &mut EstimatorState,
    y: &[f64],
) -> Result<()> {
    let op = setup.chebyshev_op(order)?;
    filtered_step(ErrorMode::Lms, step_size, op, &setup.mask, state, y)
}

pub fn gsd_step(
    step_size: f64,
    order: usize,
    setup: &Setup,
    state: &mut EstimatorState,
    y: &[f64],
) -> Result<()> {
    let op = setup.chebyshev_op(order)?;
    filtered_step(ErrorMode::Sign, step_size, op, &setup.mask, state, y)
}

/// Writes the new estimate only if every entry is finite.
fn commit(state: &mut EstimatorState, f: impl Fn(usize, f64) -> f64) -> Result<()> {
    let next: Vec<f64> = state
        .estimate
        .iter()
        .enumerate()
        .map(|(i, &x)| f(i, x))
        .collect();
    if let Some(node) = next.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { node });
    }
    state.estimate = next;
    state.t += 1;
    Ok(())
}

/// A configured estimator bound to a [`Setup`].
#[derive(Debug, Clone)]
pub struct Estimator<'a> {
    setup: &'a Setup,
    config: EstimatorConfig,
    state: EstimatorState,
}

impl<'a> Estimator<'a> {
    pub fn new(setup: &'a Setup, config: EstimatorConfig, initial: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if initial.len() != setup.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: setup.n_nodes(),
                got: initial.len(),
            });
        }
        if let Some(order) = config.chebyshev_order() {
            setup.chebyshev_op(order)?;
        }
        Ok(Estimator {
            setup,
            config,
            state: EstimatorState::new(initial),
        })
    }

    pub fn step(&mut self, y: &[f64]) -> Result<()> {
        let setup = self.setup;
        let state = &mut self.state;
        match &self.config {
            EstimatorConfig::Gsamp(c) => gsamp_step(c, setup, state, y),
            EstimatorConfig::Glms { step_size } => glms_step(*step_size, setup, state, y),
            EstimatorConfig::GSign { step_size } => gsign_step(*step_size, setup, state, y),
            EstimatorConfig::Gdlms { step_size, order } => {
                gdlms_step(*step_size, *order, setup, state, y)
            }
            EstimatorConfig::Gsd { step_size, order } => gsd_step(*step_size, *order, setup, state, y),
        }
    }

    pub fn estimate(&self) -> &[f64] {
        &self.state.estimate
    }

    pub fn state(&self) -> &EstimatorState {
        &self.state
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn setup(graph: Graph, mask: ObservationMask, ratio: f64) -> Setup {
        Setup::new(graph, mask, ratio, ratio, &[]).unwrap()
    }

    #[test]
    fn zero_weights_leave_estimate() {
        let s = setup(Graph::path(4).unwrap(), ObservationMask::all(4), 0.5);
        for agg in [AggregatorKind::Sum, AggregatorKind::Median, AggregatorKind::Smooth] {
            let cfg = GsampConfig::new(ErrorMode::Lms, agg, [0.0; 4]);
            let mut st = EstimatorState::new(vec![1.0, 2.0, 3.0, 4.0]);
            gsamp_step(&cfg, &s, &mut st, &[9.0, 9.0, 9.0, 9.0]).unwrap();
            assert_eq!(st.estimate, vec![1.0, 2.0, 3.0, 4.0]);
            assert_eq!(st.t, 1);
        }
    }

    #[test]
    fn single_node_graph_is_static() {
        let s = setup(Graph::from_edges(1, &[]).unwrap(), ObservationMask::all(1), 1.0);
        let cfg = GsampConfig::new(ErrorMode::Lms, AggregatorKind::Sum, [1.0, 0.0, 2.0, 0.0]);
        let mut st = EstimatorState::new(vec![0.5]);
        gsamp_step(&cfg, &s, &mut st, &[3.0]).unwrap();
        assert_eq!(st.estimate, vec![0.5]);
    }

    #[test]
    fn baseline_examples() {
        let s = setup(Graph::path(3).unwrap(), ObservationMask::all(3), 1.0);
        let y = [1.0, -2.0, 0.5];
        let mut st = EstimatorState::new(vec![0.0; 3]);
        glms_step(0.0, &s, &mut st, &y).unwrap();
        assert_eq!(st.estimate, vec![0.0; 3]);
        glms_step(1.0, &s, &mut st, &y).unwrap();
        for (a, b) in st.estimate.iter().zip(&y) {
            assert!((a - b).abs() < 1e-8);
        }

        let s = setup(Graph::path(2).unwrap(), ObservationMask::all(2), 0.5);
        let mut st = EstimatorState::new(vec![0.0, 0.0]);
        glms_step(1.0, &s, &mut st, &[2.0, 0.0]).unwrap();
        assert!((st.estimate[0] - 1.0).abs() < 1e-14 && (st.estimate[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_finite_update_keeps_state() {
        let s = setup(Graph::path(2).unwrap(), ObservationMask::all(2), 1.0);
        let cfg = GsampConfig::new(ErrorMode::Lms, AggregatorKind::Sum, [f64::MAX, 0.0, 0.0, 0.0]);
        let mut st = EstimatorState::new(vec![0.0, 0.0]);
        let err = gsamp_step(&cfg, &s, &mut st, &[f64::MAX, f64::MAX]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
        assert_eq!(st, EstimatorState::new(vec![0.0, 0.0]));
    }

    #[test]
    fn stability_guard_caps_message() {
        let mut m = vec![3.0, 4.0];
        assert!(apply_stability_guard(&mut m, 1.0));
        assert!((norm_sq(&m) - 1.0).abs() < 1e-15);
        let mut m = vec![0.3, 0.4];
        assert!(!apply_stability_guard(&mut m, 1.0));
    }

    #[test]
    fn estimator_requires_chebyshev_operator() {
        let s = setup(Graph::path(3).unwrap(), ObservationMask::all(3), 0.5);
        let cfg = EstimatorConfig::Gdlms {
            step_size: 1.0,
            order: 7,
        };
        assert!(matches!(
            Estimator::new(&s, cfg, vec![0.0; 3]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn chebyshev_all_pass_equals_unfiltered_update() {
        let g = Graph::path(5).unwrap();
        let s = Setup::new(g, ObservationMask::all(5), 1.0, 1.0, &[6]).unwrap();
        let y = [1.0, -1.0, 2.0, 0.0, 3.0];
        let mut a = EstimatorState::new(vec![0.1; 5]);
        let mut b = a.clone();
        gdlms_step(0.8, 6, &s, &mut a, &y).unwrap();
        filtered_step(ErrorMode::Lms, 0.8, &FilterOperator::identity(5), &s.mask, &mut b, &y).unwrap();
        for (x, z) in a.estimate.iter().zip(&b.estimate) {
            assert!((x - z).abs() < 1e-8);
        }
    }
}
