//! Graph Fourier bases, ideal low-pass operators, their Chebyshev
//! surrogates and the per-node local smoothing rows.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{jacobi_eigen, Matrix};

/// Inputs further than this from symmetric are rejected.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
/// Eigenvalues closer than this are treated as one eigenspace.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;
/// Number of Chebyshev nodes used to fit filter coefficients.
pub const CHEBYSHEV_SAMPLES: usize = 256;

/// Orthonormal eigenvectors of a symmetric matrix, eigenvalues ascending.
///
/// Column `i` of `eigenvectors` pairs with `eigenvalues[i]`. The first entry
/// of each column whose magnitude exceeds `1e-10` is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl EigenBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Graph Fourier transform `U^T x`.
    pub fn gft(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eigenvectors.transpose().mul_vec(x)
    }

    pub fn inverse_gft(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.eigenvectors.mul_vec(coeffs)
    }

    /// `U diag(h) U^T`.
    pub fn synthesize(&self, response: &[f64]) -> Matrix {
        let n = self.len();
        let u = &self.eigenvectors;
        let mut b = Matrix::zeros(n, n);
        for (k, &h) in response.iter().enumerate() {
            if h == 0.0 {
                continue;
            }
            for i in 0..n {
                let ui = h * u[(i, k)];
                if ui == 0.0 {
                    continue;
                }
                for j in 0..n {
                    b[(i, j)] += ui * u[(j, k)];
                }
            }
        }
        b
    }
}

pub fn eigendecompose(laplacian: &Matrix) -> Result<EigenBasis> {
    if !laplacian.is_square() {
        return Err(Error::DimensionMismatch {
            expected: laplacian.rows(),
            got: laplacian.cols(),
        });
    }
    let asym = laplacian.asymmetry();
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::invalid(format!(
            "matrix is not symmetric (max |a_ij - a_ji| = {asym:e})"
        )));
    }
    let n = laplacian.rows();
    let (values, vectors) = jacobi_eigen(laplacian)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = vectors.column(src);
        let sign = col
            .iter()
            .find(|v| v.abs() > 1e-10)
            .map_or(1.0, |&v| if v < 0.0 { -1.0 } else { 1.0 });
        for (i, v) in col.into_iter().enumerate() {
            eigenvectors[(i, dst)] = sign * v;
        }
    }
    Ok(EigenBasis {
        eigenvalues: order.iter().map(|&i| values[i]).collect(),
        eigenvectors,
    })
}

/// Ideal 0/1 low-pass response over an ascending spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFilter {
    pub cutoff_ratio: f64,
    pub response: Vec<f64>,
}

impl SpectralFilter {
    /// Passes every eigenvalue `<= ratio * lambda_max`.
    pub fn by_value(eigenvalues: &[f64], ratio: f64) -> Result<Self> {
        check_ratio(ratio)?;
        let lmax = eigenvalues.last().copied().unwrap_or(0.0);
        let cut = ratio * lmax + 1e-12 * lmax.abs();
        let passed = eigenvalues.iter().filter(|&&l| l <= cut).count().max(1);
        Ok(Self::with_passband(eigenvalues, ratio, passed))
    }

    /// Passes the first `max(1, ceil(ratio * n))` eigenvalues.
    pub fn by_count(eigenvalues: &[f64], ratio: f64) -> Result<Self> {
        check_ratio(ratio)?;
        let n = eigenvalues.len();
        Ok(Self::with_passband(eigenvalues, ratio, passband_len(n, ratio)))
    }

    /// Exactly `len` leading ones, widened so a repeated eigenvalue is never split.
    pub fn with_passband(eigenvalues: &[f64], ratio: f64, len: usize) -> Self {
        let n = eigenvalues.len();
        let mut l = len.min(n);
        let requested = l;
        while l > 0 && l < n && (eigenvalues[l] - eigenvalues[l - 1]).abs() <= DEGENERACY_TOLERANCE
        {
            l += 1;
        }
        if l != requested {
            log::warn!(
                "passband of {requested} splits a repeated eigenvalue; widened to {l}"
            );
        }
        let mut response = vec![0.0; n];
        response[..l].iter_mut().for_each(|h| *h = 1.0);
        SpectralFilter {
            cutoff_ratio: ratio,
            response,
        }
    }

    pub fn passband_len(&self) -> usize {
        self.response.iter().filter(|&&h| h != 0.0).count()
    }
}

/// `max(1, ceil(ratio * n))`, clamped to `n`.
pub fn passband_len(n: usize, ratio: f64) -> usize {
    let l = libm::ceil(ratio * n as f64 - 1e-9);
    (l.max(1.0) as usize).min(n)
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::invalid(format!(
            "cutoff ratio must lie in (0, 1], got {ratio}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Exact,
    Chebyshev { order: usize },
}

/// Dense symmetric filter matrix applied as `B x`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOperator {
    pub matrix: Matrix,
    pub kind: FilterKind,
}

impl FilterOperator {
    pub fn identity(n: usize) -> Self {
        FilterOperator {
            matrix: Matrix::identity(n),
            kind: FilterKind::Exact,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.matrix.mul_vec(x)
    }
}

/// `U diag(h) U^T` with `h` passing eigenvalues up to `ratio * lambda_max`.
pub fn ideal_lowpass_operator(basis: &EigenBasis, ratio: f64) -> Result<FilterOperator> {
    let filter = SpectralFilter::by_value(&basis.eigenvalues, ratio)?;
    Ok(filter_operator(basis, &filter))
}

pub fn filter_operator(basis: &EigenBasis, filter: &SpectralFilter) -> FilterOperator {
    FilterOperator {
        matrix: basis.synthesize(&filter.response),
        kind: FilterKind::Exact,
    }
}

/// Chebyshev coefficients of the ideal response `1[lambda <= ratio * lambda_max]`
/// on `[0, lambda_max]`, fitted by least squares on [`CHEBYSHEV_SAMPLES`]
/// Chebyshev nodes. Discrete orthogonality at those nodes makes the fit a
/// cosine sum.
pub fn chebyshev_coefficients(ratio: f64, order: usize) -> Vec<f64> {
    let m = CHEBYSHEV_SAMPLES;
    let samples: Vec<(f64, f64)> = (0..m)
        .map(|j| {
            let angle = PI * (j as f64 + 0.5) / m as f64;
            // x in [-1, 1] maps to lambda / lambda_max = (x + 1) / 2
            let x = libm::cos(angle);
            let h = if (x + 1.0) / 2.0 <= ratio { 1.0 } else { 0.0 };
            (angle, h)
        })
        .collect();
    (0..=order)
        .map(|k| {
            let s: f64 = samples
                .iter()
                .map(|&(angle, h)| h * libm::cos(k as f64 * angle))
                .sum();
            let c = 2.0 * s / m as f64;
            if k == 0 {
                c / 2.0
            } else {
                c
            }
        })
        .collect()
}

/// Evaluates `sum_k c_k T_k(2 lambda / lambda_max - 1)`.
pub fn chebyshev_response(coeffs: &[f64], lambda: f64, lambda_max: f64) -> f64 {
    let x = 2.0 * lambda / lambda_max - 1.0;
    let (mut t_prev, mut t_cur) = (1.0, x);
    let mut acc = 0.0;
    for (k, &c) in coeffs.iter().enumerate() {
        let t = match k {
            0 => 1.0,
            1 => x,
            _ => {
                let next = 2.0 * x * t_cur - t_prev;
                t_prev = t_cur;
                t_cur = next;
                next
            }
        };
        acc += c * t;
    }
    acc
}

/// Order-`order` Chebyshev approximation of the ideal low-pass filter,
/// `sum_k c_k T_k(2 L / lambda_max - I)`.
pub fn chebyshev_operator(
    laplacian: &Matrix,
    lambda_max: f64,
    ratio: f64,
    order: usize,
) -> Result<FilterOperator> {
    if order == 0 {
        return Err(Error::invalid("Chebyshev order must be at least 1"));
    }
    if !(lambda_max > 0.0) {
        return Err(Error::invalid(format!(
            "lambda_max must be positive, got {lambda_max}"
        )));
    }
    check_ratio(ratio)?;
    if !laplacian.is_square() {
        return Err(Error::DimensionMismatch {
            expected: laplacian.rows(),
            got: laplacian.cols(),
        });
    }
    let n = laplacian.rows();
    let coeffs = chebyshev_coefficients(ratio, order);
    let shifted = laplacian
        .scaled(2.0 / lambda_max)
        .sub(&Matrix::identity(n))?;

    let mut t_prev = Matrix::identity(n);
    let mut t_cur = shifted.clone();
    let mut acc = t_prev.scaled(coeffs[0]).add(&t_cur.scaled(coeffs[1]))?;
    for &c in &coeffs[2..] {
        let next = shifted.matmul(&t_cur)?.scaled(2.0).sub(&t_prev)?;
        acc = acc.add(&next.scaled(c))?;
        t_prev = t_cur;
        t_cur = next;
    }
    // symmetrise away round-off from the recurrence
    let matrix = acc.add(&acc.transpose())?.scaled(0.5);
    Ok(FilterOperator {
        matrix,
        kind: FilterKind::Chebyshev { order },
    })
}

/// Row of the local low-pass operator belonging to the center of a neighbourhood.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSmoother {
    pub theta: Vec<f64>,
    /// Center first, then neighbours ascending; `theta[i]` weighs `member_order[i]`.
    pub member_order: Vec<usize>,
}

/// Local smoothers for every node, indexed by node.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSmoothers {
    pub ratio: f64,
    pub entries: Vec<LocalSmoother>,
}

impl LocalSmoothers {
    pub fn get(&self, v: usize) -> &LocalSmoother {
        &self.entries[v]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn local_smoother(g: &Graph, v: usize, ratio: f64) -> Result<LocalSmoother> {
    let nb = g.induced_neighborhood(v)?;
    let wrap = |e: Error| Error::LocalSmoother {
        node: v,
        source: Box::new(e),
    };
    let basis = eigendecompose(&nb.local_laplacian()).map_err(wrap)?;
    let filter = SpectralFilter::by_count(&basis.eigenvalues, ratio)?;
    let u = &basis.eigenvectors;
    let m = nb.len();
    let theta = (0..m)
        .map(|j| {
            filter
                .response
                .iter()
                .enumerate()
                .map(|(k, &h)| h * u[(0, k)] * u[(j, k)])
                .sum()
        })
        .collect();
    Ok(LocalSmoother {
        theta,
        member_order: nb.members,
    })
}

pub fn precompute_local_smoothers(g: &Graph, ratio: f64) -> Result<LocalSmoothers> {
    check_ratio(ratio)?;
    let entries = (0..g.n_nodes())
        .map(|v| local_smoother(g, v, ratio))
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalSmoothers { ratio, entries })
}
