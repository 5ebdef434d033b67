//! Observation sets: the masking operator, greedy spectral sampling and the
//! four observation-status weight classes.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, jacobi_eigen, norm_sq, Matrix};
use crate::spectral::EigenBasis;

/// Diagonal 0/1 sampling operator. At least one node is observed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    observed: Vec<bool>,
}

impl ObservationMask {
    pub fn new(observed: Vec<bool>) -> Result<Self> {
        if !observed.iter().any(|&o| o) {
            return Err(Error::invalid("mask must observe at least one node"));
        }
        Ok(ObservationMask { observed })
    }

    pub fn all(n: usize) -> Self {
        ObservationMask {
            observed: vec![true; n],
        }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut observed = vec![false; n];
        for &i in indices {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
            observed[i] = true;
        }
        ObservationMask::new(observed)
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    #[inline]
    pub fn is_observed(&self, i: usize) -> bool {
        self.observed[i]
    }

    pub fn flags(&self) -> &[bool] {
        &self.observed
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn observed_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.observed[i]).collect()
    }

    pub fn matrix(&self) -> Matrix {
        Matrix::from_diag(
            &self
                .observed
                .iter()
                .map(|&o| if o { 1.0 } else { 0.0 })
                .collect::<Vec<_>>(),
        )
    }

    /// `M_S x`: observed entries pass through, the rest become zero.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: x.len(),
            });
        }
        Ok(x
            .iter()
            .zip(&self.observed)
            .map(|(&v, &o)| if o { v } else { 0.0 })
            .collect())
    }

    /// One CSV line of `0`/`1` flags, no trailing newline.
    pub fn to_csv_line(&self) -> String {
        let mut s = String::with_capacity(2 * self.len());
        for (i, &o) in self.observed.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push(if o { '1' } else { '0' });
        }
        s
    }

    pub fn parse_csv_line(line: &str) -> Result<Self> {
        let observed = line
            .trim()
            .split(',')
            .enumerate()
            .map(|(i, f)| match f.trim() {
                "1" => Ok(true),
                "0" => Ok(false),
                other => Err(Error::invalid(format!(
                    "mask field {i} must be 0 or 1, got `{other}`"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        ObservationMask::new(observed)
    }
}

/// Message weight class of the ordered pair (receiver `v`, sender `j`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightClass {
    /// both observed
    W1,
    /// `v` observed, `j` missing
    W2,
    /// `v` missing, `j` observed
    W3,
    /// both missing
    W4,
}

impl WeightClass {
    pub fn from_status(v_observed: bool, j_observed: bool) -> Self {
        match (v_observed, j_observed) {
            (true, true) => WeightClass::W1,
            (true, false) => WeightClass::W2,
            (false, true) => WeightClass::W3,
            (false, false) => WeightClass::W4,
        }
    }

    /// Class of the reversed pair.
    pub fn transposed(self) -> Self {
        match self {
            WeightClass::W2 => WeightClass::W3,
            WeightClass::W3 => WeightClass::W2,
            c => c,
        }
    }
}

pub fn classify_pair(mask: &ObservationMask, v: usize, j: usize) -> WeightClass {
    WeightClass::from_status(mask.is_observed(v), mask.is_observed(j))
}

/// Scores within this distance count as ties.
pub const GREEDY_TIE_TOLERANCE: f64 = 1e-10;

/// Score of adding one row to the selected block.
///
/// `sigma_min` is the smallest of the `F` singular values (zero while fewer
/// than `F` rows are selected); `log_volume` ranks candidates by the product
/// of the nonzero singular values, offset by a term shared by all candidates
/// of the same step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyScore {
    pub sigma_min: f64,
    pub log_volume: f64,
}

impl GreedyScore {
    /// Strictly better beyond tolerance, lexicographic in (sigma_min, log_volume).
    pub fn beats(&self, other: &GreedyScore) -> bool {
        let ds = self.sigma_min - other.sigma_min;
        if ds.abs() > GREEDY_TIE_TOLERANCE {
            return ds > 0.0;
        }
        match (self.log_volume.is_finite(), other.log_volume.is_finite()) {
            (true, true) => self.log_volume - other.log_volume > GREEDY_TIE_TOLERANCE,
            (true, false) => self.log_volume > other.log_volume,
            _ => false,
        }
    }
}

/// Greedy max-min-singular-value sampling: the selection order of `m` nodes.
///
/// Each step adds the node whose row of the first `bandwidth` eigenvectors
/// maximises the smallest singular value of the selected block, with ties
/// going to the larger volume and then to the smaller index.
pub fn greedy_order(basis: &EigenBasis, m: usize, bandwidth: usize) -> Result<Vec<usize>> {
    let n = basis.len();
    if bandwidth == 0 || bandwidth > n {
        return Err(Error::invalid(format!(
            "bandwidth must satisfy 1 <= F <= {n}, got {bandwidth}"
        )));
    }
    if m > n || bandwidth > m {
        return Err(Error::invalid(format!(
            "sample count must satisfy F = {bandwidth} <= m <= {n}, got {m}"
        )));
    }
    let f = bandwidth;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| basis.eigenvectors.row(i)[..f].to_vec())
        .collect();

    let mut selected = Vec::with_capacity(m);
    let mut taken = vec![false; n];
    // orthonormal basis of the selected rows while fewer than F are chosen
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    let mut gram = Matrix::zeros(f, f);

    while selected.len() < m {
        let next_count = selected.len() + 1;
        let spectrum = if next_count >= f {
            Some(sorted_eigen(&gram)?)
        } else {
            None
        };
        let mut best: Option<(usize, GreedyScore)> = None;
        for c in (0..n).filter(|&c| !taken[c]) {
            let r = &rows[c];
            let score = if next_count <= f {
                let resid = residual(r, &ortho);
                let rn = libm::sqrt(norm_sq(&resid));
                let sigma_min = if let Some((vals, vecs)) = spectrum.as_ref() {
                    libm::sqrt(rank_one_min_eigen(vals, vecs, r).max(0.0))
                } else {
                    0.0
                };
                GreedyScore {
                    sigma_min,
                    log_volume: libm::log(rn),
                }
            } else {
                let (vals, vecs) = spectrum.as_ref().unwrap();
                let lam = rank_one_min_eigen(vals, vecs, r);
                let proj = project(vecs, r);
                let q: f64 = vals
                    .iter()
                    .zip(&proj)
                    .filter(|(&l, _)| l > 1e-14)
                    .map(|(&l, &p)| p * p / l)
                    .sum();
                GreedyScore {
                    sigma_min: libm::sqrt(lam.max(0.0)),
                    log_volume: 0.5 * libm::log1p(q),
                }
            };
            match best {
                Some((_, b)) if !score.beats(&b) => {}
                _ => best = Some((c, score)),
            }
        }
        let (pick, _) = best.expect("candidates remain while selected < m <= n");
        taken[pick] = true;
        selected.push(pick);
        let r = &rows[pick];
        if ortho.len() < f {
            let resid = residual(r, &ortho);
            let rn = libm::sqrt(norm_sq(&resid));
            if rn > 1e-12 {
                ortho.push(resid.iter().map(|x| x / rn).collect());
            }
        }
        for i in 0..f {
            for j in 0..f {
                gram[(i, j)] += r[i] * r[j];
            }
        }
    }
    Ok(selected)
}

pub fn greedy_select(basis: &EigenBasis, m: usize, bandwidth: usize) -> Result<ObservationMask> {
    let order = greedy_order(basis, m, bandwidth)?;
    ObservationMask::from_indices(basis.len(), &order)
}

fn residual(r: &[f64], ortho: &[Vec<f64>]) -> Vec<f64> {
    let mut out = r.to_vec();
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for q in ortho {
            let c = dot(&out, q);
            out.iter_mut().zip(q).for_each(|(o, qi)| *o -= c * qi);
        }
    }
    out
}

fn sorted_eigen(gram: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let (vals, vecs) = jacobi_eigen(gram)?;
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let n = vals.len();
    let mut sorted = Matrix::zeros(n, n);
    for (dst, &src) in idx.iter().enumerate() {
        for i in 0..n {
            sorted[(i, dst)] = vecs[(i, src)];
        }
    }
    Ok((idx.iter().map(|&i| vals[i]).collect(), sorted))
}

fn project(vecs: &Matrix, r: &[f64]) -> Vec<f64> {
    (0..vecs.cols())
        .map(|k| (0..r.len()).map(|i| vecs[(i, k)] * r[i]).sum())
        .collect()
}

/// Smallest eigenvalue of `V diag(vals) V^T + r r^T`, with `vals` ascending,
/// from the secular equation `1 + sum c_i^2 / (vals_i - x) = 0`, `c = V^T r`.
fn rank_one_min_eigen(vals: &[f64], vecs: &Matrix, r: &[f64]) -> f64 {
    let c = project(vecs, r);
    let l1 = vals[0];
    let c_sq: f64 = c.iter().map(|x| x * x).sum();
    let mut hi = l1 + c_sq;
    if vals.len() > 1 {
        hi = hi.min(vals[1]);
    }
    if hi - l1 <= 0.0 {
        return l1;
    }
    let secular = |x: f64| -> f64 {
        1.0 + c
            .iter()
            .zip(vals)
            .map(|(&ci, &li)| ci * ci / (li - x))
            .sum::<f64>()
    };
    let mut lo = l1;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if secular(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
