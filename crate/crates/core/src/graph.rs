//! Undirected, unweighted graph topologies and their matrix forms.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, Matrix};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Tolerance on the smallest Laplacian eigenvalue when checking semidefiniteness.
pub const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::invalid(format!(
                "coordinate ({lat}, {lon}) outside [-90, 90] x [-180, 180]"
            )));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Great-circle distance in kilometres.
    pub fn haversine_km(&self, other: &GeoPoint) -> f64 {
        let to_rad = core::f64::consts::PI / 180.0;
        let (p1, p2) = (self.lat * to_rad, other.lat * to_rad);
        let dp = p2 - p1;
        let dl = (other.lon - self.lon) * to_rad;
        let s1 = libm::sin(dp / 2.0);
        let s2 = libm::sin(dl / 2.0);
        let h = s1 * s1 + libm::cos(p1) * libm::cos(p2) * s2 * s2;
        2.0 * EARTH_RADIUS_KM * libm::asin(libm::sqrt(h.min(1.0)))
    }
}

/// Undirected unweighted graph with its adjacency, degree and Laplacian.
///
/// Adjacency and Laplacian are kept in exact integer form; floating point
/// copies are produced on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    adjacency: Vec<u8>,
    degrees: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from undirected edges. Self-loops and out-of-range
    /// endpoints are rejected; duplicate edges collapse.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("graph needs at least one node"));
        }
        let mut adjacency = vec![0u8; n * n];
        for &(a, b) in edges {
            for idx in [a, b] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, len: n });
                }
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop at node {a}")));
            }
            adjacency[a * n + b] = 1;
            adjacency[b * n + a] = 1;
        }
        Ok(Self::from_adjacency_unchecked(n, adjacency))
    }

    /// Wraps a raw row-major `n x n` 0/1 adjacency without checking it.
    /// Use [`Graph::validate`] to inspect the result.
    pub fn from_adjacency_unchecked(n: usize, adjacency: Vec<u8>) -> Self {
        assert_eq!(adjacency.len(), n * n, "adjacency must be n x n");
        let neighbors: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| adjacency[i * n + j] != 0).collect())
            .collect();
        let degrees = (0..n)
            .map(|i| adjacency[i * n..(i + 1) * n].iter().map(|&a| a as usize).sum())
            .collect();
        Graph {
            n,
            adjacency,
            degrees,
            neighbors,
        }
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges)
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j] != 0
    }

    pub fn adjacency_entry(&self, i: usize, j: usize) -> u8 {
        self.adjacency[i * self.n + j]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// Neighbours of `v` in ascending index order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for &j in &self.neighbors[i] {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn adjacency_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = f64::from(self.adjacency[i * self.n + j]);
            }
        }
        m
    }

    /// `L = D - A` computed in integers.
    pub fn laplacian_int(&self) -> Vec<i64> {
        let n = self.n;
        let mut l = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                l[i * n + j] = -i64::from(self.adjacency[i * n + j]);
            }
            l[i * n + i] += self.degrees[i] as i64;
        }
        l
    }

    pub fn laplacian(&self) -> Matrix {
        let n = self.n;
        let li = self.laplacian_int();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = li[i * n + j] as f64;
            }
        }
        m
    }

    /// Number of connected components, via iterative DFS.
    pub fn n_components(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &j in &self.neighbors[v] {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.n_components() == 1
    }

    /// Hop distance from every node to the nearest node of `sources`
    /// (`usize::MAX` when unreachable).
    pub fn hop_distances(&self, sources: &[usize]) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut frontier: Vec<usize> = Vec::new();
        for &s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                frontier.push(s);
            }
        }
        let mut hop = 0;
        while !frontier.is_empty() {
            hop += 1;
            let mut next = Vec::new();
            for v in frontier {
                for &j in &self.neighbors[v] {
                    if dist[j] == usize::MAX {
                        dist[j] = hop;
                        next.push(j);
                    }
                }
            }
            frontier = next;
        }
        dist
    }

    pub fn induced_neighborhood(&self, v: usize) -> Result<Neighborhood> {
        if v >= self.n {
            return Err(Error::IndexOutOfRange {
                index: v,
                len: self.n,
            });
        }
        let mut members = Vec::with_capacity(self.degrees[v] + 1);
        members.push(v);
        members.extend(self.neighbors[v].iter().copied().filter(|&j| j != v));
        let mut local_edges = Vec::new();
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                if self.adjacent(i, j) {
                    local_edges.push((i.min(j), i.max(j)));
                }
            }
        }
        local_edges.sort_unstable();
        Ok(Neighborhood {
            center: v,
            members,
            local_edges,
        })
    }

    /// Checks every structural invariant and reports each failure.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.n;
        let mut out = Vec::new();
        for i in 0..n {
            if self.adjacency[i * n + i] != 0 {
                out.push(Violation::SelfLoop { node: i });
            }
            for k in 0..n {
                let a = self.adjacency[i * n + k];
                if a > 1 {
                    out.push(Violation::NonBinary { i, k, value: a });
                }
                if k > i && a != self.adjacency[k * n + i] {
                    out.push(Violation::Asymmetric { i, k });
                }
            }
        }
        let l = self.laplacian_int();
        for i in 0..n {
            if l[i * n..(i + 1) * n].iter().sum::<i64>() != 0 {
                out.push(Violation::LaplacianRowSum { row: i });
            }
        }
        let symmetric = !out.iter().any(|v| matches!(v, Violation::Asymmetric { .. }));
        if symmetric {
            match jacobi_eigen(&self.laplacian()) {
                Ok((vals, _)) => {
                    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
                    if min < -PSD_TOLERANCE {
                        out.push(Violation::NotPositiveSemidefinite { min_eigenvalue: min });
                    }
                }
                Err(_) => out.push(Violation::NotPositiveSemidefinite {
                    min_eigenvalue: f64::NAN,
                }),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    SelfLoop { node: usize },
    Asymmetric { i: usize, k: usize },
    NonBinary { i: usize, k: usize, value: u8 },
    LaplacianRowSum { row: usize },
    NotPositiveSemidefinite { min_eigenvalue: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop { node } => {
                write!(f, "zero diagonal: self-loop at adjacency ({node}, {node})")
            }
            Violation::Asymmetric { i, k } => {
                write!(f, "symmetry: adjacency ({i}, {k}) differs from ({k}, {i})")
            }
            Violation::NonBinary { i, k, value } => {
                write!(f, "binary adjacency: entry ({i}, {k}) is {value}")
            }
            Violation::LaplacianRowSum { row } => {
                write!(f, "laplacian row sum: row {row} does not sum to zero")
            }
            Violation::NotPositiveSemidefinite { min_eigenvalue } => {
                write!(f, "positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")
            }
        }
    }
}

/// Node `v` together with its one-hop neighbours and the induced edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub center: usize,
    /// Center first, then neighbours ascending.
    pub members: Vec<usize>,
    /// All parent edges with both endpoints in `members`, as global `(i, j)`, `i < j`.
    pub local_edges: Vec<(usize, usize)>,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Laplacian of the induced subgraph in member order.
    pub fn local_laplacian(&self) -> Matrix {
        let m = self.members.len();
        let pos = |g: usize| self.members.iter().position(|&x| x == g).unwrap();
        let mut l = Matrix::zeros(m, m);
        for &(i, j) in &self.local_edges {
            let (a, b) = (pos(i), pos(j));
            l[(a, b)] -= 1.0;
            l[(b, a)] -= 1.0;
            l[(a, a)] += 1.0;
            l[(b, b)] += 1.0;
        }
        l
    }
}

/// Symmetrised k-nearest-neighbour graph under the haversine distance.
///
/// Node `i` links to its `k` closest points (ties broken by index); an edge
/// exists when either endpoint selected the other.
pub fn build_knn_graph(points: &[GeoPoint], k: usize) -> Result<Graph> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid("k-NN graph needs at least two points"));
    }
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "k must satisfy 1 <= k < {n}, got {k}"
        )));
    }
    let mut seen = BTreeSet::new();
    for (i, p) in points.iter().enumerate() {
        if !seen.insert((p.lat.to_bits(), p.lon.to_bits())) {
            return Err(Error::invalid(format!(
                "duplicate point at index {i}: ({}, {})",
                p.lat, p.lon
            )));
        }
    }
    let mut edges = Vec::with_capacity(n * k);
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for (i, p) in points.iter().enumerate() {
        order.clear();
        order.extend(
            points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, q)| (p.haversine_km(q), j)),
        );
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        edges.extend(order.iter().take(k).map(|&(_, j)| (i, j)));
    }
    Graph::from_edges(n, &edges)
}
