use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::models::QuadraticModel;
use crate::numstats::chi2_sf;
use crate::{Error, Result};

/// Exact posterior `N(θ*, H⁻¹)` of a quadratic loss.
#[derive(Debug, Clone)]
pub struct PosteriorOracle {
    theta_star: DVector<f64>,
    hessian: DMatrix<f64>,
    covariance: DMatrix<f64>,
    // lower Cholesky factor of H⁻¹
    chol: DMatrix<f64>,
}

impl PosteriorOracle {
    pub fn new(theta_star: DVector<f64>, hessian: DMatrix<f64>) -> Result<Self> {
        let d = theta_star.len();
        if hessian.nrows() != d || hessian.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: hessian.nrows(),
            });
        }
        let covariance = hessian
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Domain("hessian must be symmetric positive definite".into()))?
            .inverse();
        let covariance = (&covariance + covariance.transpose()) * 0.5;
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Domain("posterior covariance is not positive definite".into()))?
            .unpack();
        Ok(Self {
            theta_star,
            hessian,
            covariance,
            chol,
        })
    }

    pub fn from_quadratic(model: &QuadraticModel) -> Result<Self> {
        Self::new(model.theta_star().clone(), model.hessian().clone())
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn theta_star(&self) -> &DVector<f64> {
        &self.theta_star
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    /// `H⁻¹`
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// `sqrt((H⁻¹)_jj)` for every coordinate.
    pub fn marginal_std(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.covariance[(j, j)].sqrt()).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let x = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.theta_star + &self.chol * x
    }

    pub fn exact_sample(&self, seed: u64) -> DVector<f64> {
        self.sample(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// `(θ - θ*)ᵀ H (θ - θ*)`
    pub fn quadratic_form(&self, theta: &DVector<f64>) -> Result<f64> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: theta.len(),
            });
        }
        let diff = theta - &self.theta_star;
        Ok(diff.dot(&(&self.hessian * &diff)).max(0.0))
    }

    /// Posterior mass of the region where the density is at most its value at θ.
    pub fn exact_credibility(&self, theta: &DVector<f64>) -> Result<f64> {
        chi2_sf(self.quadratic_form(theta)?, self.dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn credibility_at_optimum_is_one() {
        let o = PosteriorOracle::new(DVector::from_vec(vec![1.0, 2.0]), DMatrix::identity(2, 2) * 3.0).unwrap();
        assert_eq!(o.exact_credibility(&DVector::from_vec(vec![1.0, 2.0])).unwrap(), 1.0);
    }

    #[test]
    fn two_dim_median_contour() {
        let o = PosteriorOracle::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        let r = (2.0 * 2f64.ln()).sqrt();
        let s = o.exact_credibility(&DVector::from_vec(vec![r * 0.6, r * 0.8])).unwrap();
        assert!((s - 0.5).abs() < 1e-14);
    }

    /// Direct quadrature of the posterior density over the sublevel set in 1-d:
    /// mass where p(θ') <= p(θ), i.e. |θ' - θ*| >= |θ - θ*|.
    fn sublevel_mass_1d(theta_star: f64, h: f64, theta: f64) -> f64 {
        let sd = 1.0 / h.sqrt();
        let r = (theta - theta_star).abs();
        let density = |x: f64| (-(x * x) / (2.0 * sd * sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
        // integrate the inner region [-r, r] and subtract from 1
        let m = 20_000;
        let step = 2.0 * r / m as f64;
        let mut s = density(-r) + density(r);
        for i in 1..m {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * density(-r + i as f64 * step);
        }
        1.0 - s * step / 3.0
    }

    #[test]
    fn one_dim_matches_sublevel_quadrature() {
        let o = PosteriorOracle::new(DVector::from_vec(vec![0.7]), DMatrix::from_element(1, 1, 2.5)).unwrap();
        for theta in [0.7, 0.9, 1.3, -0.4, 2.5] {
            let expected = sublevel_mass_1d(0.7, 2.5, theta);
            let got = o.exact_credibility(&DVector::from_vec(vec![theta])).unwrap();
            assert!((got - expected).abs() < 1e-10, "θ={theta}: {got} vs {expected}");
        }
    }

    #[test]
    fn seeded_samples_reproduce() {
        let o = PosteriorOracle::new(DVector::zeros(3), DMatrix::identity(3, 3)).unwrap();
        assert_eq!(o.exact_sample(5), o.exact_sample(5));
        assert_ne!(o.exact_sample(5), o.exact_sample(6));
    }

    #[test]
    fn identity_samples_have_zero_mean() {
        let o = PosteriorOracle::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 10_000;
        let mut mean = DVector::zeros(2);
        for _ in 0..n {
            mean += o.sample(&mut rng);
        }
        mean /= n as f64;
        let band = 3.0 / (n as f64).sqrt();
        assert!(mean.iter().all(|m| m.abs() < band), "{mean}");
    }

    #[test]
    fn sample_covariance_matches_inverse_hessian() {
        let h = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.0]);
        let o = PosteriorOracle::new(DVector::from_vec(vec![1.0, -1.0, 0.0]), h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mut second = DVector::<f64>::zeros(3);
        let mut first = DVector::<f64>::zeros(3);
        for _ in 0..n {
            let s = o.sample(&mut rng);
            first += &s;
            second += s.component_mul(&s);
        }
        first /= n as f64;
        second /= n as f64;
        for j in 0..3 {
            let var = second[j] - first[j] * first[j];
            let expected = o.covariance()[(j, j)];
            assert!((var - expected).abs() < 0.05 * expected, "j={j}: {var} vs {expected}");
        }
    }

    #[test]
    fn credibility_invariant_under_reparameterization() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let star = DVector::from_vec(vec![0.5, -0.5]);
        let o = PosteriorOracle::new(star.clone(), h.clone()).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[1.5, -0.7, 0.2, 3.0]);
        let m_inv = m.clone().try_inverse().unwrap();
        // θ' = Mθ, H' = M⁻ᵀ H M⁻¹
        let h2 = m_inv.transpose() * &h * &m_inv;
        let o2 = PosteriorOracle::new(&m * &star, (&h2 + h2.transpose()) * 0.5).unwrap();
        for theta in [DVector::from_vec(vec![1.0, 1.0]), DVector::from_vec(vec![-0.3, 0.2])] {
            let a = o.exact_credibility(&theta).unwrap();
            let b = o2.exact_credibility(&(&m * &theta)).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite_hessian() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(PosteriorOracle::new(DVector::zeros(2), h).is_err());
    }
}
