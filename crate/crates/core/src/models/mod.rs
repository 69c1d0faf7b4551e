//! Losses written as a sum of per-sample terms, each carrying its `1/n`
//! share of the prior, with per-sample gradients.

mod logistic;
mod quadratic;

pub use logistic::{sigmoid, softplus, LogisticModel};
pub use quadratic::{log_uniform_spectrum, QuadraticModel};

use nalgebra::DVector;

use crate::numstats::GradientMatrix;
use crate::{Error, Result};

pub trait LossModel {
    /// Parameter dimension `d`.
    fn dim(&self) -> usize;

    /// Number of training samples `n`.
    fn n_samples(&self) -> usize;

    fn sample_loss(&self, i: usize, theta: &DVector<f64>) -> Result<f64>;

    /// Row `i` is the gradient of `sample_loss(i, ·)` at `theta`.
    fn sample_gradients(&self, theta: &DVector<f64>) -> Result<GradientMatrix>;

    fn total_loss(&self, theta: &DVector<f64>) -> Result<f64> {
        (0..self.n_samples()).map(|i| self.sample_loss(i, theta)).sum()
    }
}

pub(crate) fn check_theta(theta: &DVector<f64>, dim: usize) -> Result<()> {
    if theta.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: theta.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_index(i: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    Ok(())
}
