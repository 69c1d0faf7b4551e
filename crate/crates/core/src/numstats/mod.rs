//! Numerical kernels: chi-squared CDF, gradient covariance with OAS
//! shrinkage, and the quadratic-form statistic `z = n ḡᵀ Σ̂⁻¹ ḡ`.

mod chi2;
mod covariance;
mod quadstat;

pub use chi2::{chi2_cdf, chi2_sf, ln_gamma, regularized_gamma_p, regularized_gamma_q};
pub use covariance::{covariance_estimate, mean_and_centered, oas_epsilon, CovarianceEstimate};
pub use quadstat::{quad_stat, quad_stat_with, InversionPath, QuadStat, QuadStatOptions, ShrunkCovariance};

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Per-sample loss gradients at one parameter value; row `i` is `g_i(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMatrix(DMatrix<f64>);

impl GradientMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() < 2 {
            return Err(Error::InvalidGradients(format!(
                "need at least 2 samples, got {}",
                entries.nrows()
            )));
        }
        if entries.ncols() == 0 {
            return Err(Error::InvalidGradients("parameter dimension is zero".into()));
        }
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos % entries.nrows(), pos / entries.nrows());
            return Err(Error::InvalidGradients(format!("non-finite entry at ({i}, {j})")));
        }
        Ok(Self(entries))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    /// Number of samples `n`.
    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    /// Parameter dimension `d`.
    pub fn d(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.0.row(i).transpose()
    }

    /// Sum of rows, i.e. the gradient of the total loss.
    pub fn total(&self) -> DVector<f64> {
        self.0.row_sum().transpose()
    }

    pub fn mean(&self) -> DVector<f64> {
        self.total() / self.n() as f64
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(&self.0 * factor)
    }

    /// Sub-matrix of the given rows.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        Self::new(self.0.select_rows(rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_single_sample() {
        let e = GradientMatrix::new(DMatrix::zeros(1, 3)).unwrap_err();
        assert!(matches!(e, Error::InvalidGradients(_)));
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = DMatrix::zeros(3, 2);
        m[(2, 1)] = f64::NAN;
        let e = GradientMatrix::new(m).unwrap_err();
        assert!(e.to_string().contains("(2, 1)"), "{e}");
    }

    #[test]
    fn ragged_rows_rejected() {
        let e = GradientMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).unwrap_err();
        assert!(matches!(e, Error::DimensionMismatch { expected: 2, actual: 1 }));
    }

    #[test]
    fn total_and_mean() {
        let g = GradientMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -2.0]]).unwrap();
        assert_eq!(g.total().as_slice(), &[4.0, 0.0]);
        assert_eq!(g.mean().as_slice(), &[2.0, 0.0]);
    }
}
