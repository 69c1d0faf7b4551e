use nalgebra::{DMatrix, DVector};

use super::GradientMatrix;

/// Shrunk gradient covariance `Σ̂ = (1-ε) Σ + ε tr(Σ) I / d`, materialized.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub sigma_hat: DMatrix<f64>,
    pub epsilon: f64,
    pub trace_sigma: f64,
}

/// Mean gradient and centred gradients scaled by `1/√n`, so that
/// `centeredᵀ · centered` is the (biased, divide-by-n) gradient covariance.
pub fn mean_and_centered(g: &GradientMatrix) -> (DVector<f64>, DMatrix<f64>) {
    let m = g.as_matrix();
    let n = g.n();
    let g_bar = g.mean();
    let scale = 1.0 / (n as f64).sqrt();
    let centered = DMatrix::from_fn(n, g.d(), |i, j| (m[(i, j)] - g_bar[j]) * scale);
    (g_bar, centered)
}

/// tr(Σ) and tr(Σ²) for `Σ = centeredᵀ centered`, using whichever Gram
/// matrix is smaller.
pub(crate) fn traces(centered: &DMatrix<f64>) -> (f64, f64) {
    let trace = centered.norm_squared();
    let gram = if centered.nrows() < centered.ncols() {
        centered * centered.transpose()
    } else {
        centered.tr_mul(centered)
    };
    (trace, gram.norm_squared())
}

/// Oracle-approximating shrinkage coefficient.
///
/// `ε = min(1, [(1 - 2/d) tr(Σ²) + tr(Σ)²] / [(n + 1 - 2/d) (tr(Σ²) - tr(Σ)²/d)])`,
/// falling back to 1 whenever the denominator is not positive.
pub fn oas_epsilon(centered: &DMatrix<f64>) -> f64 {
    let n = centered.nrows() as f64;
    let d = centered.ncols() as f64;
    let (tr, tr2) = traces(centered);
    let num = (1.0 - 2.0 / d) * tr2 + tr * tr;
    let den = (n + 1.0 - 2.0 / d) * (tr2 - tr * tr / d);
    if !(den > 0.0) {
        return 1.0;
    }
    (num / den).clamp(0.0, 1.0)
}

/// Materializes the shrunk covariance of `g` with the OAS coefficient.
pub fn covariance_estimate(g: &GradientMatrix) -> CovarianceEstimate {
    let (_, centered) = mean_and_centered(g);
    let epsilon = oas_epsilon(&centered);
    let sigma = centered.tr_mul(&centered);
    let trace_sigma = sigma.trace();
    let d = g.d();
    let sigma_hat = sigma * (1.0 - epsilon) + DMatrix::identity(d, d) * (epsilon * trace_sigma / d as f64);
    CovarianceEstimate {
        sigma_hat,
        epsilon,
        trace_sigma,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn brute_covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = rows.len();
        let d = rows[0].len();
        let mut mean = vec![0.0; d];
        for r in rows {
            for k in 0..d {
                mean[k] += r[k] / n as f64;
            }
        }
        let mut cov = vec![vec![0.0; d]; d];
        for r in rows {
            for a in 0..d {
                for b in 0..d {
                    cov[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]) / n as f64;
                }
            }
        }
        cov
    }

    /// Straight transcription of the OAS formula over an explicit covariance.
    #[allow(clippy::needless_range_loop)]
    fn oas_formula(cov: &[Vec<f64>], n: usize) -> f64 {
        let d = cov.len() as f64;
        let n = n as f64;
        let tr: f64 = (0..cov.len()).map(|i| cov[i][i]).sum();
        let mut tr2 = 0.0;
        for a in 0..cov.len() {
            for b in 0..cov.len() {
                tr2 += cov[a][b] * cov[b][a];
            }
        }
        let num = (1.0 - 2.0 / d) * tr2 + tr * tr;
        let den = (n + 1.0 - 2.0 / d) * (tr2 - tr * tr / d);
        if den <= 0.0 {
            1.0
        } else {
            (num / den).clamp(0.0, 1.0)
        }
    }

    fn random_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect()
    }

    #[test]
    fn identical_rows_have_zero_spread() {
        let v = vec![0.5, -1.0, 2.0];
        let g = GradientMatrix::from_rows(&[v.clone(), v.clone(), v.clone(), v.clone()]).unwrap();
        let (g_bar, centered) = mean_and_centered(&g);
        assert_eq!(g_bar.as_slice(), v.as_slice());
        assert!(centered.iter().all(|&x| x == 0.0));
        assert_eq!(oas_epsilon(&centered), 1.0);
    }

    #[test]
    fn two_point_example() {
        let g = GradientMatrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let (g_bar, centered) = mean_and_centered(&g);
        assert_eq!(g_bar.as_slice(), &[0.0, 0.0]);
        let sigma = centered.tr_mul(&centered);
        let brute = brute_covariance(&[vec![1.0, 0.0], vec![-1.0, 0.0]]);
        assert_eq!(brute, vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        for a in 0..2 {
            for b in 0..2 {
                assert!((sigma[(a, b)] - brute[a][b]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn centered_gram_matches_brute_force() {
        let rows = random_rows(5, 3, 11);
        let g = GradientMatrix::from_rows(&rows).unwrap();
        let (_, centered) = mean_and_centered(&g);
        let sigma = centered.tr_mul(&centered);
        let brute = brute_covariance(&rows);
        for a in 0..3 {
            for b in 0..3 {
                assert!((sigma[(a, b)] - brute[a][b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn isotropic_covariance_gives_full_shrinkage() {
        // rows ±e_k give Σ = I/3 exactly
        let mut rows = Vec::new();
        for k in 0..3 {
            let mut r = vec![0.0; 3];
            r[k] = 1.0;
            rows.push(r.clone());
            r[k] = -1.0;
            rows.push(r);
        }
        let g = GradientMatrix::from_rows(&rows).unwrap();
        let (_, centered) = mean_and_centered(&g);
        assert_eq!(oas_epsilon(&centered), 1.0);
    }

    #[test]
    fn oas_matches_formula_transcription_on_anisotropic_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let scales = [3.0, 1.0, 0.5, 0.1];
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                scales
                    .iter()
                    .map(|s| s * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let expected = oas_formula(&brute_covariance(&rows), 50);
        let g = GradientMatrix::from_rows(&rows).unwrap();
        let (_, centered) = mean_and_centered(&g);
        let eps = oas_epsilon(&centered);
        assert!((eps - expected).abs() < 1e-12, "{eps} vs {expected}");
        assert!(eps > 0.0 && eps < 1.0);
    }

    #[test]
    fn oas_wide_matrix_uses_small_gram() {
        let rows = random_rows(4, 10, 5);
        let expected = oas_formula(&brute_covariance(&rows), 4);
        let g = GradientMatrix::from_rows(&rows).unwrap();
        let (_, centered) = mean_and_centered(&g);
        assert!((oas_epsilon(&centered) - expected).abs() < 1e-12);
    }

    #[test]
    fn shrunk_covariance_is_symmetric_and_trace_preserving() {
        let rows = random_rows(7, 5, 3);
        let est = covariance_estimate(&GradientMatrix::from_rows(&rows).unwrap());
        let s = &est.sigma_hat;
        assert!((s - s.transpose()).amax() <= 1e-12 * s.amax());
        assert!((s.trace() - est.trace_sigma).abs() < 1e-12 * est.trace_sigma);
        assert!(s.clone().cholesky().is_some());
    }
}
