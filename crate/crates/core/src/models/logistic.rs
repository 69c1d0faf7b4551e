use nalgebra::{DMatrix, DVector};

use super::{check_index, check_theta, LossModel};
use crate::numstats::GradientMatrix;
use crate::{Error, Result};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// L2-regularised logistic regression. The design matrix carries a trailing
/// constant column for the bias; labels are stored as ±1.
///
/// `l_i(θ) = ln(1 + exp(-y_i x_iᵀθ)) + (λ / 2n) ‖θ‖²`
#[derive(Debug, Clone)]
pub struct LogisticModel {
    design: DMatrix<f64>,
    signs: DVector<f64>,
    prior_precision: f64,
}

impl LogisticModel {
    /// `features` is n×p (already standardized); labels are 0/1.
    pub fn new(features: &DMatrix<f64>, labels: &[u8], prior_precision: f64) -> Result<Self> {
        let p = features.ncols();
        let mut design = features.clone().resize_horizontally(p + 1, 1.0);
        design.column_mut(p).fill(1.0);
        Self::from_design(design, labels, prior_precision)
    }

    /// Uses `design` as is, without appending a bias column.
    pub fn from_design(design: DMatrix<f64>, labels: &[u8], prior_precision: f64) -> Result<Self> {
        if labels.len() != design.nrows() {
            return Err(Error::DimensionMismatch {
                expected: design.nrows(),
                actual: labels.len(),
            });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::NonBinaryLabels(3));
        }
        if !(prior_precision >= 0.0) {
            return Err(Error::Domain(format!(
                "prior precision must be >= 0, got {prior_precision}"
            )));
        }
        let signs = DVector::from_iterator(labels.len(), labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }));
        Ok(Self {
            design,
            signs,
            prior_precision,
        })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn prior_precision(&self) -> f64 {
        self.prior_precision
    }

    fn margins(&self, theta: &DVector<f64>) -> DVector<f64> {
        (&self.design * theta).component_mul(&self.signs)
    }

    /// Mean log-loss over the rows, without the prior term.
    pub fn data_loss(&self, theta: &DVector<f64>) -> Result<f64> {
        check_theta(theta, self.dim())?;
        let m = self.margins(theta);
        Ok(m.iter().map(|&v| softplus(-v)).sum::<f64>() / m.len() as f64)
    }

    /// Fraction of rows classified correctly at threshold 0.5.
    pub fn accuracy(&self, theta: &DVector<f64>) -> Result<f64> {
        check_theta(theta, self.dim())?;
        let m = self.margins(theta);
        Ok(m.iter().filter(|&&v| v > 0.0).count() as f64 / m.len() as f64)
    }

    pub fn predict_proba(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        check_theta(theta, self.dim())?;
        Ok((&self.design * theta).map(sigmoid))
    }
}

impl LossModel for LogisticModel {
    fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn n_samples(&self) -> usize {
        self.design.nrows()
    }

    fn sample_loss(&self, i: usize, theta: &DVector<f64>) -> Result<f64> {
        check_index(i, self.n_samples())?;
        check_theta(theta, self.dim())?;
        let margin = self.signs[i] * self.design.row(i).dot(&theta.transpose());
        let prior = self.prior_precision / (2.0 * self.n_samples() as f64) * theta.norm_squared();
        Ok(softplus(-margin) + prior)
    }

    fn total_loss(&self, theta: &DVector<f64>) -> Result<f64> {
        check_theta(theta, self.dim())?;
        let m = self.margins(theta);
        Ok(m.iter().map(|&v| softplus(-v)).sum::<f64>() + 0.5 * self.prior_precision * theta.norm_squared())
    }

    fn sample_gradients(&self, theta: &DVector<f64>) -> Result<GradientMatrix> {
        check_theta(theta, self.dim())?;
        let n = self.n_samples();
        let m = self.margins(theta);
        let weights = DVector::from_fn(n, |i, _| -self.signs[i] * sigmoid(-m[i]));
        let mut g = DMatrix::from_diagonal(&weights) * &self.design;
        let prior = theta * (self.prior_precision / n as f64);
        for mut row in g.row_iter_mut() {
            row += prior.transpose();
        }
        GradientMatrix::new(g)
    }
}
