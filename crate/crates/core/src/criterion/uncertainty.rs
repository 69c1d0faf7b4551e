use nalgebra::DVector;

use crate::numstats::{GradientMatrix, QuadStatOptions, ShrunkCovariance};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyEstimate {
    pub sigma_f: f64,
    pub f_grad: DVector<f64>,
}

/// Posterior standard deviation of a scalar function with gradient `f_grad`,
/// `sqrt(f'ᵀ Σ̂⁻¹ f' / (κ n))`. `g` should be taken near the optimum.
pub fn uncertainty_of(f_grad: &DVector<f64>, g: &GradientMatrix, kappa: f64) -> Result<UncertaintyEstimate> {
    check_kappa(kappa)?;
    if f_grad.len() != g.d() {
        return Err(Error::DimensionMismatch {
            expected: g.d(),
            actual: f_grad.len(),
        });
    }
    if f_grad.iter().all(|&v| v == 0.0) {
        return Ok(UncertaintyEstimate {
            sigma_f: 0.0,
            f_grad: f_grad.clone(),
        });
    }
    let cov = ShrunkCovariance::from_gradients(g, QuadStatOptions::default())?;
    let q = cov.quad_form(f_grad)?;
    Ok(UncertaintyEstimate {
        sigma_f: (q / (kappa * g.n() as f64)).sqrt(),
        f_grad: f_grad.clone(),
    })
}

/// Standard deviation of every coordinate `θ_j`, sharing one factorization.
pub fn parameter_uncertainties(g: &GradientMatrix, kappa: f64) -> Result<Vec<f64>> {
    check_kappa(kappa)?;
    let cov = ShrunkCovariance::from_gradients(g, QuadStatOptions::default())?;
    let denom = kappa * g.n() as f64;
    (0..g.d())
        .map(|j| {
            let mut e = DVector::zeros(g.d());
            e[j] = 1.0;
            Ok((cov.quad_form(&e)? / denom).sqrt())
        })
        .collect()
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("loss scale must be positive, got {kappa}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn sample_g() -> GradientMatrix {
        GradientMatrix::new(DMatrix::from_row_slice(
            5,
            3,
            &[
                1.0, 0.2, -0.3, 0.4, -1.1, 0.8, -0.6, 0.3, 0.1, 0.2, 0.9, -0.7, -1.0, -0.3, 0.2,
            ],
        ))
        .unwrap()
    }

    #[test]
    fn constant_function_has_no_uncertainty() {
        let u = uncertainty_of(&DVector::zeros(3), &sample_g(), 1.0).unwrap();
        assert_eq!(u.sigma_f, 0.0);
    }

    #[test]
    fn linear_in_gradient() {
        let g = sample_g();
        let f = DVector::from_vec(vec![0.5, -1.0, 2.0]);
        let base = uncertainty_of(&f, &g, 1.0).unwrap().sigma_f;
        for c in [0.5, 3.0, -2.0] {
            let scaled = uncertainty_of(&(&f * c), &g, 1.0).unwrap().sigma_f;
            assert!((scaled - c.abs() * base).abs() <= 1e-14 * scaled.max(1.0));
        }
    }

    #[test]
    fn kappa_scaling() {
        let g = sample_g();
        let f = DVector::from_vec(vec![1.0, 0.0, 1.0]);
        let a = uncertainty_of(&f, &g, 1.0).unwrap().sigma_f;
        let b = uncertainty_of(&f, &g, 2.0).unwrap().sigma_f;
        assert!((b - a / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn coordinate_uncertainties_match_unit_gradients() {
        let g = sample_g();
        let all = parameter_uncertainties(&g, 1.0).unwrap();
        for (j, &s) in all.iter().enumerate() {
            let mut e = DVector::zeros(3);
            e[j] = 1.0;
            assert!((uncertainty_of(&e, &g, 1.0).unwrap().sigma_f - s).abs() < 1e-14);
        }
    }

    #[test]
    fn dimension_checked() {
        assert!(matches!(
            uncertainty_of(&DVector::zeros(2), &sample_g(), 1.0),
            Err(Error::DimensionMismatch { expected: 3, actual: 2 })
        ));
    }
}
