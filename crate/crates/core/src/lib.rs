//! Early stopping of full-batch gradient descent by approximate posterior
//! sampling, computed from per-sample gradient statistics only.
//!
//! The crate is organised bottom-up:
//!
//! * [`numstats`] holds the numerical kernels (chi-squared CDF, gradient
//!   covariance, OAS shrinkage, the quadratic-form statistic).
//! * [`criterion`] turns a gradient matrix into a credible value, tracks the
//!   stopping decision, and estimates parameter uncertainty.
//! * [`baselines`] contains the comparison statistics and their stop rules.
//! * [`registry`] puts every stopping rule behind the [`registry::StoppingCriterion`]
//!   trait so runs can select them by name.
//! * [`models`], [`optim`], [`oracle`] and [`data`] provide the training
//!   loop, ground truth and dataset plumbing used by [`experiment`].

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod criterion;
pub mod data;
pub mod error;
pub mod experiment;
pub mod models;
pub mod numstats;
pub mod optim;
pub mod oracle;
pub mod registry;

pub use error::{Error, Result};
pub use numstats::GradientMatrix;
