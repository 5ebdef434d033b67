#![allow(dead_code)]

use gsamp_core::{GeoPoint, Graph, Matrix};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct TestRng(ChaCha8Rng);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| 4.0 * self.unit() - 2.0).collect()
    }
}

/// Random spanning tree plus `extra` random chords.
pub fn random_connected(n: usize, extra: usize, rng: &mut TestRng) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.below(v), v));
    }
    for _ in 0..extra {
        let a = rng.below(n);
        let b = rng.below(n);
        if a != b && !edges.contains(&(a.min(b), a.max(b))) && !edges.contains(&(a.max(b), a.min(b))) {
            edges.push((a, b));
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

pub fn random_points(n: usize, rng: &mut TestRng) -> Vec<GeoPoint> {
    (0..n)
        .map(|_| GeoPoint::new(30.0 + 15.0 * rng.unit(), -120.0 + 40.0 * rng.unit()).unwrap())
        .collect()
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

pub fn assert_close(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len());
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        assert!((g - w).abs() <= tol, "entry {i}: got {g}, want {w}");
    }
}
