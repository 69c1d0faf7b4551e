use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{check_index, check_theta, LossModel};
use crate::numstats::GradientMatrix;
use crate::{Error, Result};

/// Gaussian quadratic loss with a shared curvature `A` and per-sample centres:
///
/// `l_i(θ) = (θ - c_i)ᵀ A (θ - c_i) / (2n) + b_i`
///
/// so `L(θ) = (θ - θ*)ᵀ A (θ - θ*) / 2` with `θ* = mean(c_i)`, the Hessian
/// is `H = A`, and the gradient covariance does not depend on θ. Offsets
/// `b_i` make `L(θ*) = 0`. Centres drawn from `N(μ, n A⁻¹)` give
/// `n Σ_G → H`.
#[derive(Debug, Clone)]
pub struct QuadraticModel {
    curvature: DMatrix<f64>,
    centers: DMatrix<f64>,
    offsets: DVector<f64>,
    theta_star: DVector<f64>,
}

/// `d` values spaced geometrically between `min` and `max`.
pub fn log_uniform_spectrum(d: usize, min: f64, max: f64) -> Vec<f64> {
    if d == 1 {
        return vec![(min * max).sqrt()];
    }
    let ratio = max / min;
    (0..d).map(|k| min * ratio.powf(k as f64 / (d - 1) as f64)).collect()
}

fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    // sign fix makes the draw Haar-distributed
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

impl QuadraticModel {
    /// From an explicit curvature and one centre per row.
    pub fn from_parts(curvature: DMatrix<f64>, centers: DMatrix<f64>) -> Result<Self> {
        let d = curvature.nrows();
        if curvature.ncols() != d || centers.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: centers.ncols(),
            });
        }
        if centers.nrows() < 2 {
            return Err(Error::Domain("quadratic model needs at least 2 samples".into()));
        }
        if (&curvature - curvature.transpose()).amax() > 1e-12 * curvature.amax() {
            return Err(Error::Domain("curvature must be symmetric".into()));
        }
        if curvature.clone().cholesky().is_none() {
            return Err(Error::Domain("curvature must be positive definite".into()));
        }
        let n = centers.nrows();
        let theta_star = centers.row_mean().transpose();
        let offsets = DVector::from_fn(n, |i, _| {
            let diff = &theta_star - centers.row(i).transpose();
            -diff.dot(&(&curvature * &diff)) / (2.0 * n as f64)
        });
        Ok(Self {
            curvature,
            centers,
            offsets,
            theta_star,
        })
    }

    /// Random rotation of `spectrum` as curvature; centres from `N(location, n A⁻¹)`.
    pub fn generate(spectrum: &[f64], n: usize, location: &DVector<f64>, seed: u64) -> Result<Self> {
        let d = spectrum.len();
        if d == 0 || n < 2 {
            return Err(Error::Domain(format!("need d >= 1 and n >= 2, got d={d} n={n}")));
        }
        if let Some(bad) = spectrum.iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("spectrum must be positive, got {bad}")));
        }
        if location.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: location.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_orthogonal(d, &mut rng);
        let curvature = &q * DMatrix::from_diagonal(&DVector::from_column_slice(spectrum)) * q.transpose();
        let curvature = (&curvature + curvature.transpose()) * 0.5;
        // n A⁻¹ = Q diag(n / λ) Qᵀ; its square root factor is Q diag(sqrt(n / λ))
        let root = &q
            * DMatrix::from_diagonal(&DVector::from_iterator(
                d,
                spectrum.iter().map(|l| (n as f64 / l).sqrt()),
            ));
        let noise = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut centers = noise * root.transpose();
        for mut row in centers.row_iter_mut() {
            row += location.transpose();
        }
        Self::from_parts(curvature, centers)
    }

    pub fn theta_star(&self) -> &DVector<f64> {
        &self.theta_star
    }

    /// Hessian of the total loss, `H = A`.
    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.curvature
    }

    pub fn centers(&self) -> &DMatrix<f64> {
        &self.centers
    }
}

impl LossModel for QuadraticModel {
    fn dim(&self) -> usize {
        self.curvature.nrows()
    }

    fn n_samples(&self) -> usize {
        self.centers.nrows()
    }

    fn sample_loss(&self, i: usize, theta: &DVector<f64>) -> Result<f64> {
        check_index(i, self.n_samples())?;
        check_theta(theta, self.dim())?;
        let diff = theta - self.centers.row(i).transpose();
        Ok(diff.dot(&(&self.curvature * &diff)) / (2.0 * self.n_samples() as f64) + self.offsets[i])
    }

    fn total_loss(&self, theta: &DVector<f64>) -> Result<f64> {
        check_theta(theta, self.dim())?;
        let diff = theta - &self.theta_star;
        Ok(diff.dot(&(&self.curvature * &diff)) / 2.0)
    }

    fn sample_gradients(&self, theta: &DVector<f64>) -> Result<GradientMatrix> {
        check_theta(theta, self.dim())?;
        let n = self.n_samples();
        let diffs = DMatrix::from_fn(n, self.dim(), |i, j| theta[j] - self.centers[(i, j)]);
        GradientMatrix::new(diffs * &self.curvature / n as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testing::{fd_gradient, rel_err};
    use crate::numstats::mean_and_centered;

    fn model(d: usize, n: usize, seed: u64) -> QuadraticModel {
        let spectrum = log_uniform_spectrum(d, 0.5, 4.0);
        QuadraticModel::generate(&spectrum, n, &DVector::from_element(d, 1.5), seed).unwrap()
    }

    #[test]
    fn spectrum_endpoints() {
        let s = log_uniform_spectrum(5, 0.1, 10.0);
        assert!((s[0] - 0.1).abs() < 1e-15 && (s[4] - 10.0).abs() < 1e-12);
        assert!((s[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_loss_at_optimum() {
        let m = model(4, 10, 1);
        assert!(m.total_loss(m.theta_star()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn symmetric_construction() {
        let m = QuadraticModel::from_parts(DMatrix::identity(3, 3), DMatrix::zeros(4, 3)).unwrap();
        assert_eq!(m.theta_star(), &DVector::zeros(3));
        assert_eq!(m.hessian(), &DMatrix::identity(3, 3));
        let theta = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        assert!((m.total_loss(&theta).unwrap() - theta.norm_squared() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn optimum_is_center_mean_and_minimizes_loss() {
        let m = model(2, 3, 4);
        let mean = m.centers().row_mean().transpose();
        assert!((m.theta_star() - &mean).norm() < 1e-14);
        // grid search around θ* finds nothing lower
        let base = m.total_loss(m.theta_star()).unwrap();
        for a in -10..=10 {
            for b in -10..=10 {
                let t = m.theta_star() + DVector::from_vec(vec![a as f64 * 0.05, b as f64 * 0.05]);
                assert!(m.total_loss(&t).unwrap() >= base - 1e-14);
            }
        }
    }

    #[test]
    fn total_loss_is_sum_and_closed_form() {
        let m = model(3, 7, 2);
        let theta = DVector::from_vec(vec![0.3, -0.2, 2.0]);
        let sum: f64 = (0..7).map(|i| m.sample_loss(i, &theta).unwrap()).sum();
        let diff = &theta - m.theta_star();
        let closed = diff.dot(&(m.hessian() * &diff)) / 2.0;
        assert!((sum - closed).abs() < 1e-10 * closed.abs().max(1.0));
    }

    #[test]
    fn summed_gradient_is_hessian_times_offset() {
        let m = model(5, 20, 8);
        let theta = DVector::from_fn(5, |k, _| k as f64 - 2.0);
        let total = m.sample_gradients(&theta).unwrap().total();
        let expected = m.hessian() * (&theta - m.theta_star());
        assert!((total - expected).norm() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let m = model(4, 6, 3);
        let theta = DVector::from_vec(vec![0.1, 0.7, -1.2, 3.0]);
        let g = m.sample_gradients(&theta).unwrap();
        for i in 0..6 {
            let fd = fd_gradient(&m, i, &theta, 1e-5);
            assert!(rel_err(&g.row(i), &fd) < 1e-4);
        }
    }

    #[test]
    fn gradient_covariance_independent_of_theta() {
        let m = model(3, 15, 6);
        let (_, c1) = mean_and_centered(&m.sample_gradients(&DVector::zeros(3)).unwrap());
        let (_, c2) = mean_and_centered(&m.sample_gradients(&DVector::from_element(3, 9.0)).unwrap());
        let s1 = c1.tr_mul(&c1);
        let s2 = c2.tr_mul(&c2);
        assert!((s1 - s2).amax() < 1e-10);
    }

    #[test]
    fn rejects_bad_inputs() {
        let loc = DVector::zeros(2);
        assert!(QuadraticModel::generate(&[1.0, -1.0], 5, &loc, 0).is_err());
        assert!(QuadraticModel::generate(&[1.0, 0.0], 5, &loc, 0).is_err());
        assert!(QuadraticModel::generate(&[1.0, 1.0], 1, &loc, 0).is_err());
        let m = model(2, 3, 0);
        assert!(matches!(
            m.sample_loss(3, &loc),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        ));
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = model(3, 5, 77);
        let b = model(3, 5, 77);
        assert_eq!(a.centers(), b.centers());
        assert_eq!(a.hessian(), b.hessian());
    }
}
