//! Error signals and the neighbourhood aggregations that turn them into messages.

use alloc::vec::Vec;

use super::{ErrorMode, WeightScheme};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sampling::{classify_pair, ObservationMask};
use crate::spectral::{FilterOperator, LocalSmoothers};

/// Masked residual `M_S (y - xhat)`, or its sign in [`ErrorMode::Sign`].
pub fn error_signal(
    mode: ErrorMode,
    mask: &ObservationMask,
    y: &[f64],
    xhat: &[f64],
) -> Result<Vec<f64>> {
    let n = mask.len();
    for v in [y, xhat] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    (0..n)
        .map(|i| {
            if !y[i].is_finite() || !xhat[i].is_finite() {
                return Err(Error::NonFinite { node: i });
            }
            if !mask.is_observed(i) {
                return Ok(0.0);
            }
            let r = y[i] - xhat[i];
            Ok(match mode {
                ErrorMode::Lms => r,
                ErrorMode::Sign => sign(r),
            })
        })
        .collect()
}

/// Three-valued sign with `sign(0) = 0`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `m_v = sum_j w(v, j) e_j` over the neighbours of `v`.
pub fn aggregate_sum(
    e: &[f64],
    graph: &Graph,
    mask: &ObservationMask,
    scheme: &WeightScheme,
) -> Vec<f64> {
    (0..graph.n_nodes())
        .map(|v| {
            let nbrs = graph.neighbors(v);
            let norm = if scheme.degree_normalized && !nbrs.is_empty() {
                1.0 / nbrs.len() as f64
            } else {
                1.0
            };
            nbrs.iter()
                .map(|&j| norm * scheme.weight(classify_pair(mask, v, j)) * e[j])
                .sum()
        })
        .collect()
}

/// Median with the mean of the middle pair for even counts; `None` when empty.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// `m_v = w_status(v) * median{ e_j : j ~ v, w(v, j) != 0 }`.
///
/// The receiver's status weight is `w1` when observed and `w3` when missing;
/// neighbours whose class weight is zero do not vote.
pub fn aggregate_median(
    e: &[f64],
    graph: &Graph,
    mask: &ObservationMask,
    scheme: &WeightScheme,
) -> Vec<f64> {
    let mut buf = Vec::new();
    (0..graph.n_nodes())
        .map(|v| {
            buf.clear();
            buf.extend(
                graph
                    .neighbors(v)
                    .iter()
                    .filter(|&&j| scheme.weight(classify_pair(mask, v, j)) != 0.0)
                    .map(|&j| e[j]),
            );
            median(&mut buf).map_or(0.0, |med| scheme.status_weight(mask.is_observed(v)) * med)
        })
        .collect()
}

/// `m_v = theta_v . (w_v * e_{N_v})` with entries in the smoother's member order.
pub fn aggregate_smooth(
    e: &[f64],
    graph: &Graph,
    mask: &ObservationMask,
    scheme: &WeightScheme,
    smoothers: &LocalSmoothers,
) -> Result<Vec<f64>> {
    if smoothers.len() != graph.n_nodes() {
        return Err(Error::Config(alloc::format!(
            "smoother table covers {} nodes, graph has {}",
            smoothers.len(),
            graph.n_nodes()
        )));
    }
    (0..graph.n_nodes())
        .map(|v| {
            let sm = smoothers.get(v);
            let order = &sm.member_order;
            if order.first() != Some(&v)
                || order[1..] != *graph.neighbors(v)
                || sm.theta.len() != order.len()
            {
                return Err(Error::Config(alloc::format!(
                    "smoother member order for node {v} does not match the graph"
                )));
            }
            let self_w = scheme.self_weight(mask.is_observed(v));
            let mut acc = sm.theta[0] * (self_w * e[v]);
            for (&theta, &j) in sm.theta[1..].iter().zip(&order[1..]) {
                acc += theta * (scheme.weight(classify_pair(mask, v, j)) * e[j]);
            }
            Ok(acc)
        })
        .collect()
}

/// Global message `w1 * B e`; the whole-graph filter in place of a local
/// aggregation. With every weight equal this is the GLMS correction.
pub fn aggregate_global(e: &[f64], scheme: &WeightScheme, op: &FilterOperator) -> Result<Vec<f64>> {
    Ok(op.apply(e)?.into_iter().map(|b| scheme.w[0] * b).collect())
}
