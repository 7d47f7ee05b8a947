//! Bayesian active-learning laboratory.
//!
//! The crate bundles everything needed to study uncertainty-based active
//! learning (UAL) for regression when the model class may not cover the
//! ground truth:
//!
//! - [`synthetic`]: polynomial (+ cosine) targets, noisy observations, pools and test sets
//! - [`datasets`]: CSV ingestion, splitting and standardization of tabular data
//! - [`bpr`]: Bayesian polynomial regression with a conjugate Gaussian prior
//! - [`gpr`]: Gaussian-process regression with linear, RBF and Matérn-5/2 kernels
//! - [`acquisition`]: variance, random, direct-MSE and MSE-upper-bound scoring
//! - [`alloop`]: the pool-based acquisition loop and its trace
//! - [`analysis`]: closed-form MSE, bias/variance decomposition and bound checks

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod alloop;
pub mod analysis;
pub mod bpr;
pub mod datasets;
mod error;
pub mod gpr;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod synthetic;

pub use error::{Error, Result};
