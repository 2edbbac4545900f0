//! Deconvolution kernel density estimation for stationary random fields on
//! `ℤ^d` observed with additive measurement error.
//!
//! The crate covers the whole pipeline: lattice regions ([`lattice`]),
//! latent/noise field simulation and dependence coefficients ([`field`]),
//! the estimator itself ([`deconv`]), closed-form asymptotic constants and
//! blocking sequences ([`asymptotics`]), and a seeded Monte Carlo harness
//! that checks bias, variance scaling and asymptotic normality
//! ([`harness`]).

pub mod asymptotics;
pub mod deconv;
pub mod error;
pub mod field;
pub mod harness;
pub mod lattice;
pub mod quadrature;
pub mod rng;

pub use asymptotics::{BandwidthSchedule, KernelMoments};
pub use deconv::{DeconvKernel, DensityEstimate, EstimatorForm, GnTable};
pub use error::{Condition, Error, Result};
pub use field::{FieldModel, FieldSample, FieldSpec, NoiseModel, NoiseSpec};
pub use harness::{CltReport, ExperimentConfig};
pub use lattice::{LatticeRegion, RegionSpec, Site};
pub use rng::SeedStream;
