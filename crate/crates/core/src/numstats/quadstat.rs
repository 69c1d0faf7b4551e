use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};

use super::covariance::{mean_and_centered, oas_epsilon};
use super::GradientMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InversionPath {
    /// Factorize the d×d shrunk covariance.
    Direct,
    /// Low-rank inverse through an n×n system.
    Woodbury,
}

impl InversionPath {
    pub fn for_shape(n: usize, d: usize) -> Self {
        if d > n {
            InversionPath::Woodbury
        } else {
            InversionPath::Direct
        }
    }
}

/// Overrides for [`quad_stat_with`]. Defaults pick the path from the shape
/// and compute ε with OAS.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuadStatOptions {
    pub path: Option<InversionPath>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadStat {
    pub z: f64,
    pub g_bar: DVector<f64>,
    pub path: InversionPath,
    pub epsilon: f64,
    pub trace_sigma: f64,
}

enum SpdFactor {
    Cholesky(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

impl SpdFactor {
    fn new(m: DMatrix<f64>) -> Result<Self> {
        if let Some(ch) = m.clone().cholesky() {
            return Ok(SpdFactor::Cholesky(ch));
        }
        log::warn!(
            "cholesky failed on {}x{} shrunk covariance, falling back to LU",
            m.nrows(),
            m.ncols()
        );
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(Error::SingularCovariance);
        }
        Ok(SpdFactor::Lu(lu))
    }

    fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let x = match self {
            SpdFactor::Cholesky(ch) => ch.solve(b),
            SpdFactor::Lu(lu) => lu.solve(b).ok_or(Error::SingularCovariance)?,
        };
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::SingularCovariance)
        }
    }
}

/// A factorized `Σ̂ = (1-ε) ḠᵀḠ + ε tr(Σ) I / d` that can apply `Σ̂⁻¹` to
/// vectors by either inversion path.
pub struct ShrunkCovariance {
    centered: DMatrix<f64>,
    epsilon: f64,
    trace_sigma: f64,
    path: InversionPath,
    factor: SpdFactor,
    // ridge term δ = (ε tr(Σ)/d)⁻¹, Woodbury only
    delta: f64,
}

impl std::fmt::Debug for ShrunkCovariance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShrunkCovariance")
            .field("n", &self.centered.nrows())
            .field("d", &self.centered.ncols())
            .field("epsilon", &self.epsilon)
            .field("trace_sigma", &self.trace_sigma)
            .field("path", &self.path)
            .finish()
    }
}

impl ShrunkCovariance {
    /// Builds from centred gradients (`(G - 1ḡᵀ)/√n`).
    pub fn from_centered(centered: DMatrix<f64>, opts: QuadStatOptions) -> Result<Self> {
        let n = centered.nrows();
        let d = centered.ncols();
        let epsilon = match opts.epsilon {
            Some(e) if (0.0..=1.0).contains(&e) => e,
            Some(e) => return Err(Error::Domain(format!("shrinkage must lie in [0, 1], got {e}"))),
            None => oas_epsilon(&centered),
        };
        let trace_sigma = centered.norm_squared();
        if trace_sigma == 0.0 {
            return Err(Error::DegenerateCovariance);
        }
        let path = opts.path.unwrap_or_else(|| InversionPath::for_shape(n, d));
        let ridge = epsilon * trace_sigma / d as f64;
        let (factor, delta) = match path {
            InversionPath::Direct => {
                let sigma = centered.tr_mul(&centered);
                let sigma_hat = sigma * (1.0 - epsilon) + DMatrix::identity(d, d) * ridge;
                (SpdFactor::new(sigma_hat)?, f64::NAN)
            }
            InversionPath::Woodbury => {
                if ridge <= 0.0 {
                    // no ridge: Σ̂ has rank <= n - 1 < d
                    return Err(Error::SingularCovariance);
                }
                let delta = 1.0 / ridge;
                // Σ̂⁻¹ = δI - δ²(1-ε) Ḡᵀ (I_n + δ(1-ε) ḠḠᵀ)⁻¹ Ḡ
                let inner = DMatrix::identity(n, n) + (&centered * centered.transpose()) * (delta * (1.0 - epsilon));
                (SpdFactor::new(inner)?, delta)
            }
        };
        Ok(Self {
            centered,
            epsilon,
            trace_sigma,
            path,
            factor,
            delta,
        })
    }

    pub fn from_gradients(g: &GradientMatrix, opts: QuadStatOptions) -> Result<Self> {
        let (_, centered) = mean_and_centered(g);
        Self::from_centered(centered, opts)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn trace_sigma(&self) -> f64 {
        self.trace_sigma
    }

    pub fn path(&self) -> InversionPath {
        self.path
    }

    pub fn dim(&self) -> usize {
        self.centered.ncols()
    }

    /// `Σ̂⁻¹ b`.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: b.len(),
            });
        }
        match self.path {
            InversionPath::Direct => self.factor.solve(b),
            InversionPath::Woodbury => {
                let projected = &self.centered * b;
                let inner = self.factor.solve(&projected)?;
                let correction = self.centered.tr_mul(&inner);
                let scale = self.delta * self.delta * (1.0 - self.epsilon);
                Ok(b * self.delta - correction * scale)
            }
        }
    }

    /// `bᵀ Σ̂⁻¹ b`, clamped at zero against roundoff.
    pub fn quad_form(&self, b: &DVector<f64>) -> Result<f64> {
        let x = self.solve(b)?;
        Ok(b.dot(&x).max(0.0))
    }
}

/// `z = n ḡᵀ Σ̂⁻¹ ḡ` with OAS shrinkage and the path chosen by shape.
pub fn quad_stat(g: &GradientMatrix) -> Result<QuadStat> {
    quad_stat_with(g, QuadStatOptions::default())
}

pub fn quad_stat_with(g: &GradientMatrix, opts: QuadStatOptions) -> Result<QuadStat> {
    let (g_bar, centered) = mean_and_centered(g);
    let path = opts.path.unwrap_or_else(|| InversionPath::for_shape(g.n(), g.d()));
    if g_bar.iter().all(|&v| v == 0.0) {
        let epsilon = opts.epsilon.unwrap_or_else(|| oas_epsilon(&centered));
        return Ok(QuadStat {
            z: 0.0,
            g_bar,
            path,
            epsilon,
            trace_sigma: centered.norm_squared(),
        });
    }
    let cov = ShrunkCovariance::from_centered(
        centered,
        QuadStatOptions {
            path: Some(path),
            ..opts
        },
    )?;
    let z = g.n() as f64 * cov.quad_form(&g_bar)?;
    Ok(QuadStat {
        z,
        g_bar,
        path,
        epsilon: cov.epsilon(),
        trace_sigma: cov.trace_sigma(),
    })
}
