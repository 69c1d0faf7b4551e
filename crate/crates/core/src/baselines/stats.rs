use nalgebra::{DMatrix, DVector};

use crate::numstats::GradientMatrix;
use crate::{Error, Result};

/// Floor added to per-coordinate gradient variances.
pub const VARIANCE_FLOOR: f64 = 1e-12;

fn pair_mean(g: &GradientMatrix, pair: impl Fn(&DMatrix<f64>, usize, usize) -> f64) -> f64 {
    let m = g.as_matrix();
    let gram = m * m.transpose();
    let n = g.n();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += pair(&gram, i, j);
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

/// Mean of `sign(g_iᵀ g_j)` over unordered pairs; orthogonal pairs count 0.
pub fn stat_sign(g: &GradientMatrix) -> f64 {
    pair_mean(g, |gram, i, j| {
        let v = gram[(i, j)];
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    })
}

/// Mean pairwise cosine similarity; pairs with a zero-norm row count 0.
pub fn stat_cos(g: &GradientMatrix) -> f64 {
    // Σ_{i<j} u_iᵀu_j = (‖Σ u_i‖² - Σ ‖u_i‖²) / 2 over unit rows u_i
    let m = g.as_matrix();
    let n = g.n();
    let mut total = DVector::<f64>::zeros(g.d());
    let mut nonzero = 0usize;
    for row in m.row_iter() {
        let norm = row.norm();
        if norm > 0.0 {
            total += row.transpose() / norm;
            nonzero += 1;
        }
    }
    let pairs = (total.norm_squared() - nonzero as f64) / 2.0;
    (pairs / (n * (n - 1) / 2) as f64).clamp(-1.0, 1.0)
}

/// Σ_k ḡ_k² / (Σ_kk + τ)
fn snr_sum(g: &GradientMatrix) -> f64 {
    let m = g.as_matrix();
    let n = g.n() as f64;
    m.column_iter()
        .map(|col| {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            mean * mean / (var + VARIANCE_FLOOR)
        })
        .sum()
}

pub fn stat_gsnr(g: &GradientMatrix) -> f64 {
    snr_sum(g) / g.d() as f64
}

pub fn stat_eb(g: &GradientMatrix) -> f64 {
    1.0 - g.n() as f64 / g.d() as f64 * snr_sum(g)
}

/// L2 distance between the mean gradients of two disjoint halves.
pub fn stat_gd(first: &GradientMatrix, second: &GradientMatrix) -> Result<f64> {
    if first.d() != second.d() {
        return Err(Error::DimensionMismatch {
            expected: first.d(),
            actual: second.d(),
        });
    }
    Ok((first.mean() - second.mean()).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal) + 0.2).collect())
            .collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn brute_pairs(r: &[Vec<f64>], f: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
        let mut s = 0.0;
        let mut count = 0;
        for i in 0..r.len() {
            for j in (i + 1)..r.len() {
                s += f(&r[i], &r[j]);
                count += 1;
            }
        }
        s / count as f64
    }

    fn brute_snr(r: &[Vec<f64>]) -> f64 {
        let n = r.len() as f64;
        (0..r[0].len())
            .map(|k| {
                let mean = r.iter().map(|x| x[k]).sum::<f64>() / n;
                let var = r.iter().map(|x| (x[k] - mean).powi(2)).sum::<f64>() / n;
                mean * mean / (var + 1e-12)
            })
            .sum()
    }

    #[test]
    fn identical_rows() {
        let g = GradientMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(stat_sign(&g), 1.0);
        assert!((stat_cos(&g) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn antipodal_pair() {
        let g = GradientMatrix::from_rows(&[vec![1.0, -2.0, 0.5], vec![-1.0, 2.0, -0.5]]).unwrap();
        assert_eq!(stat_sign(&g), -1.0);
        assert!((stat_cos(&g) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_rows_contribute_zero() {
        let g = GradientMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        // pairs: (0,1)=0, (0,2)=0, (1,2)=1/sqrt(2)
        assert!((stat_cos(&g) - (0.5f64).sqrt() / 3.0).abs() < 1e-15);
        assert!((stat_sign(&g) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pairwise_match_brute_force() {
        let r = rows(4, 3, 17);
        let g = GradientMatrix::from_rows(&r).unwrap();
        let sign = brute_pairs(&r, |a, b| dot(a, b).signum());
        let cos = brute_pairs(&r, |a, b| dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt()));
        assert!((stat_sign(&g) - sign).abs() < 1e-15);
        assert!((stat_cos(&g) - cos).abs() < 1e-12);
    }

    #[test]
    fn gsnr_and_eb_match_coordinate_loop() {
        let r = rows(7, 4, 5);
        let g = GradientMatrix::from_rows(&r).unwrap();
        let snr = brute_snr(&r);
        assert!((stat_gsnr(&g) - snr / 4.0).abs() < 1e-12 * snr);
        assert!((stat_eb(&g) - (1.0 - 7.0 / 4.0 * snr)).abs() < 1e-12 * snr.max(1.0));
    }

    #[test]
    fn zero_variance_guard() {
        let g = GradientMatrix::from_rows(&[vec![2.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let v = stat_gsnr(&g);
        assert!(v.is_finite());
        assert!((v - 4.0 / (2.0 * VARIANCE_FLOOR)).abs() < 1e-6 * v);
    }

    #[test]
    fn zero_mean() {
        let g = GradientMatrix::from_rows(&[vec![1.0, -3.0], vec![-1.0, 3.0]]).unwrap();
        assert_eq!(stat_gsnr(&g), 0.0);
        assert_eq!(stat_eb(&g), 1.0);
    }

    #[test]
    fn strong_signal_makes_eb_negative() {
        let g = GradientMatrix::from_rows(&[vec![100.0, 50.0], vec![100.001, 50.0], vec![99.999, 50.001]]).unwrap();
        assert!(stat_eb(&g) < -1e6);
    }

    #[test]
    fn gradient_disparity() {
        let a = GradientMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let b = GradientMatrix::from_rows(&[vec![-1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(stat_gd(&a, &a).unwrap(), 0.0);
        assert!((stat_gd(&a, &b).unwrap() - 2.0).abs() < 1e-15);
        let r1 = rows(3, 5, 1);
        let r2 = rows(4, 5, 2);
        let mut diff = 0.0;
        for k in 0..5 {
            let m1 = r1.iter().map(|x| x[k]).sum::<f64>() / 3.0;
            let m2 = r2.iter().map(|x| x[k]).sum::<f64>() / 4.0;
            diff += (m1 - m2).powi(2);
        }
        let got = stat_gd(
            &GradientMatrix::from_rows(&r1).unwrap(),
            &GradientMatrix::from_rows(&r2).unwrap(),
        )
        .unwrap();
        assert!((got - diff.sqrt()).abs() < 1e-14);
        let c = GradientMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(stat_gd(&a, &c).is_err());
    }

    proptest! {
        #[test]
        fn positive_row_scaling_invariance(seed in any::<u64>(), scales in proptest::collection::vec(0.01f64..50.0, 6)) {
            let r = rows(6, 3, seed);
            let scaled: Vec<Vec<f64>> = r.iter().zip(&scales).map(|(row, s)| row.iter().map(|v| v * s).collect()).collect();
            let g = GradientMatrix::from_rows(&r).unwrap();
            let h = GradientMatrix::from_rows(&scaled).unwrap();
            prop_assert_eq!(stat_sign(&g), stat_sign(&h));
            prop_assert!((stat_cos(&g) - stat_cos(&h)).abs() < 1e-12);
        }

        #[test]
        fn permutation_invariance(seed in any::<u64>(), shift in 1usize..7) {
            let r = rows(7, 3, seed);
            let mut p = r.clone();
            p.rotate_left(shift);
            let g = GradientMatrix::from_rows(&r).unwrap();
            let h = GradientMatrix::from_rows(&p).unwrap();
            prop_assert!((stat_sign(&g) - stat_sign(&h)).abs() < 1e-14);
            prop_assert!((stat_cos(&g) - stat_cos(&h)).abs() < 1e-12);
            prop_assert!((stat_gsnr(&g) - stat_gsnr(&h)).abs() <= 1e-10 * stat_gsnr(&g).abs().max(1.0));
            prop_assert!((stat_eb(&g) - stat_eb(&h)).abs() <= 1e-10 * stat_eb(&g).abs().max(1.0));
        }

        #[test]
        fn similarity_bounds(seed in any::<u64>()) {
            let g = GradientMatrix::from_rows(&rows(5, 2, seed)).unwrap();
            prop_assert!((-1.0..=1.0).contains(&stat_sign(&g)));
            prop_assert!((-1.0..=1.0).contains(&stat_cos(&g)));
        }
    }
}
