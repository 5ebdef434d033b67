//! Graph signal adaptive message passing.
//!
//! Online estimators for time-varying graph signals observed on a subset of
//! nodes under Gaussian or impulsive (symmetric alpha-stable) noise. The crate
//! holds the numerical core only: graph construction, Laplacian spectra,
//! spectral filters, noise generation, sampling sets, the estimator family and
//! the trial/Monte-Carlo drivers. It is `no_std` and needs only `alloc`; file
//! formats, the CLI and parallel execution live in the `gsamp` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod error;
pub mod estimators;
pub mod experiment;
pub mod graph;
pub mod linalg;
pub mod noise;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
pub use estimators::{
    diffusion_init, AggregatorKind, ErrorMode, Estimator, EstimatorConfig, EstimatorState,
    WeightScheme,
};
pub use experiment::{Dataset, MseReport, RunConfig, SynthSpec};
pub use graph::{GeoPoint, Graph, Neighborhood};
pub use linalg::Matrix;
pub use noise::{SasParams, SasSampler, Seed};
pub use sampling::{ObservationMask, WeightClass};
pub use spectral::{EigenBasis, FilterOperator, LocalSmoother, SpectralFilter};
