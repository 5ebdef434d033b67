use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sampling::ObservationMask;

/// Initial estimate from the first observation.
///
/// Observed nodes keep `y0`. Each pass fills every still-empty node that has
/// at least one filled neighbour with the mean of those neighbours, using
/// only values filled before the pass. Nodes left empty at the fixpoint take
/// the mean over observed nodes.
pub fn diffusion_init(graph: &Graph, mask: &ObservationMask, y0: &[f64]) -> Result<Vec<f64>> {
    let n = graph.n_nodes();
    if mask.len() != n || y0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if mask.len() != n { mask.len() } else { y0.len() },
        });
    }
    let mut value = vec![0.0; n];
    let mut filled = vec![false; n];
    for i in 0..n {
        if mask.is_observed(i) {
            value[i] = y0[i];
            filled[i] = true;
        }
    }
    loop {
        let mut updates = Vec::new();
        for v in (0..n).filter(|&v| !filled[v]) {
            let (sum, count) = graph
                .neighbors(v)
                .iter()
                .filter(|&&j| filled[j])
                .fold((0.0, 0usize), |(s, c), &j| (s + value[j], c + 1));
            if count > 0 {
                updates.push((v, sum / count as f64));
            }
        }
        if updates.is_empty() {
            break;
        }
        for (v, x) in updates {
            value[v] = x;
            filled[v] = true;
        }
    }
    if filled.iter().any(|&f| !f) {
        let obs = mask.observed_indices();
        let mean = obs.iter().map(|&i| y0[i]).sum::<f64>() / obs.len() as f64;
        for v in 0..n {
            if !filled[v] {
                value[v] = mean;
            }
        }
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_of_observed_neighbours() {
        let g = Graph::path(3).unwrap();
        let m = ObservationMask::from_indices(3, &[0, 2]).unwrap();
        assert_eq!(diffusion_init(&g, &m, &[2.0, 0.0, 4.0]).unwrap(), vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn fully_observed_is_identity() {
        let g = Graph::path(4).unwrap();
        let y = [1.0, -2.0, 3.5, 0.25];
        assert_eq!(diffusion_init(&g, &ObservationMask::all(4), &y).unwrap(), y.to_vec());
    }

    #[test]
    fn fixpoint_passes() {
        let g = Graph::path(3).unwrap();
        let m = ObservationMask::from_indices(3, &[0]).unwrap();
        assert_eq!(diffusion_init(&g, &m, &[6.0, 0.0, 0.0]).unwrap(), vec![6.0; 3]);
    }

    #[test]
    fn unreachable_nodes_take_global_mean() {
        let g = Graph::from_edges(4, &[(0, 1)]).unwrap();
        let m = ObservationMask::from_indices(4, &[0, 1]).unwrap();
        let x = diffusion_init(&g, &m, &[1.0, 3.0, 0.0, 0.0]).unwrap();
        assert_eq!(x, vec![1.0, 3.0, 2.0, 2.0]);
    }
}
