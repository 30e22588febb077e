//! Numerical core for kernel-complexity measures, Gibbs posteriors in fixed
//! design, and PAC-Bayesian excess-risk bounds.
//!
//! The crate is organized bottom-up:
//! - [`linalg`]: symmetric eigenvalues and Cholesky helpers;
//! - [`kernel`]: kernel functions, Gram matrices, spectra, RKHS expansions;
//! - [`spectral`]: synthetic Mercer kernels with prescribed eigenvalue decay;
//! - [`complexity`]: effective dimension, information gain, relative
//!   information gain and its closed-form upper bounds;
//! - [`gibbs`]: data generation, posterior marginals, Gaussian KL, risks;
//! - [`bounds`]: the excess-risk bound, schedules, coverage experiments.
//!
//! Everything is a pure function of its inputs; randomized operations take
//! explicit seeds and are deterministic given them.

// Input validation writes `!(x > 0.0)` on purpose: NaN fails the check along
// with out-of-range values, which `x <= 0.0` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod complexity;
pub mod error;
pub mod gibbs;
pub mod kernel;
pub mod linalg;
pub mod spectral;

pub use error::{Error, Result};
