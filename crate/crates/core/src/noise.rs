//! Symmetric alpha-stable noise.
//!
//! Samples are drawn with the Chambers-Mallows-Stuck transform from a
//! ChaCha8 stream, so a `(params, seed)` pair reproduces the same values on
//! every platform. `gamma` is the scale parameter: the standard variate is
//! multiplied by `gamma`, which gives variance `2 gamma^2` at `alpha = 2` and
//! characteristic function `exp(-|gamma t|^alpha)` in general.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// Identity of the generator behind every sampler, for report metadata.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SasParams {
    pub alpha: f64,
    pub gamma: f64,
    pub mu: f64,
}

impl SasParams {
    pub fn new(alpha: f64, gamma: f64, mu: f64) -> Result<Self> {
        let p = SasParams { alpha, gamma, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 2], got {}",
                self.alpha
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma must be positive and finite, got {}",
                self.gamma
            )));
        }
        if !self.mu.is_finite() {
            return Err(Error::invalid(format!("mu must be finite, got {}", self.mu)));
        }
        Ok(())
    }

    pub fn is_gaussian(&self) -> bool {
        self.alpha == 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seed(pub u64);

impl Seed {
    /// Child seed for a labelled sub-stream, e.g. one Monte-Carlo trial.
    pub fn derive(self, label: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(label.wrapping_add(0x5851_F42D_4C95_7F2D))))
    }
}

/// SplitMix64 finaliser.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stateful SaS sampler.
#[derive(Debug, Clone)]
pub struct SasSampler {
    params: SasParams,
    rng: ChaCha8Rng,
}

impl SasSampler {
    pub fn new(params: SasParams, seed: Seed) -> Result<Self> {
        params.validate()?;
        Ok(SasSampler {
            params,
            rng: ChaCha8Rng::seed_from_u64(seed.0),
        })
    }

    pub fn params(&self) -> SasParams {
        self.params
    }

    /// Uniform on the open interval (0, 1).
    fn open_unit(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Unit-scale, zero-location variate.
    pub fn next_standard(&mut self) -> f64 {
        let u = FRAC_PI_2 * (2.0 * self.open_unit() - 1.0);
        let w = -libm::log(self.open_unit());
        standard_cms(self.params.alpha, u, w)
    }

    pub fn next_sample(&mut self) -> f64 {
        self.params.gamma * self.next_standard() + self.params.mu
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.next_sample();
        }
    }

    pub fn sample(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_sample()).collect()
    }
}

/// Chambers-Mallows-Stuck map from `u ~ U(-pi/2, pi/2)` and `w ~ Exp(1)` to a
/// symmetric stable variate with unit scale.
pub fn standard_cms(alpha: f64, u: f64, w: f64) -> f64 {
    if alpha == 2.0 {
        // sin(2u) / sqrt(cos u) * sqrt(w / cos u)
        2.0 * libm::sin(u) * libm::sqrt(w)
    } else if alpha == 1.0 {
        libm::tan(u)
    } else {
        let au = alpha * u;
        libm::sin(au) / libm::pow(libm::cos(u), 1.0 / alpha)
            * libm::pow(libm::cos(u - au) / w, (1.0 - alpha) / alpha)
    }
}

/// `n` i.i.d. SaS samples for `seed`.
pub fn sample_sas(params: SasParams, n: usize, seed: Seed) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    Ok(SasSampler::new(params, seed)?.sample(n))
}

/// Real part of the empirical characteristic function, `mean(cos(t x_i))`.
pub fn empirical_char_fn(samples: &[f64], t: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("empirical characteristic function needs samples"));
    }
    let s: f64 = samples.iter().map(|&x| libm::cos(t * x)).sum();
    Ok(s / samples.len() as f64)
}

/// Characteristic function of the law `sample_sas` draws from (location 0).
pub fn char_fn(params: &SasParams, t: f64) -> f64 {
    libm::exp(-libm::pow((params.gamma * t).abs(), params.alpha))
}
