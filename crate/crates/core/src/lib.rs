//! Numerics for fully nonlinear path-dependent PDEs on desk-scale grids.
//!
//! The crate provides the `d_p` path-space pseudo-metric, sup/inf-convolution
//! regularizations with their finite-dimensional projections, a controlled
//! lattice surrogate for sublinear expectations, optimal stopping and
//! viscosity checks, and a controlled-diffusion benchmark.

pub mod cli;
pub mod control_bench;
pub mod error;
pub mod functional;
pub mod nonlinear_expectation;
pub mod path_space;
pub mod regularization;
pub mod stopping_viscosity;

pub use error::{Error, Result};
