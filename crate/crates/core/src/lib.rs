//! Sampling of Whittle-Matern Gaussian random fields on the unit sphere.
//!
//! A field solves `(κ² − Δ)^β u = W` with truncated white noise `W`. The
//! sampler discretizes with P1 surface finite elements on an icosphere,
//! reduces `⌊β⌋` integer powers to repeated Helmholtz solves and the
//! fractional remainder to a sinc quadrature of shifted solves. The
//! [`spectral`] module provides the exact solution in the harmonic basis
//! and [`convergence`] the Monte Carlo error studies built on it.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod convergence;
pub mod error;
pub mod fractional;
pub mod harmonics;
pub mod lift;
pub mod mesh;
pub mod noise;
pub mod quadrature;
pub mod sfem;
pub mod sparse;
pub mod spectral;
pub mod vec3;
pub mod vtk;

pub use config::RunConfig;
pub use convergence::{fit_rate, lifted_l2_error, monte_carlo_strong_error, ConvergenceRow};
pub use error::{Error, Result};
pub use fractional::{sample_field, sinc_nodes, ModelParams, Sampler};
pub use harmonics::HarmonicCoeffs;
pub use mesh::{icosphere, TriangleMesh};
pub use noise::NoiseMode;
pub use sfem::{FemField, FemSpace};
pub use sparse::{SolverConfig, SparseSymmetricMatrix};
