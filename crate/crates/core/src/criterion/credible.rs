use crate::numstats::{chi2_sf, quad_stat, GradientMatrix};
use crate::{Error, Result};

/// Estimated posterior mass outside the density contour through θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CredibleValue {
    pub s_hat: f64,
    pub z: f64,
    pub iteration: usize,
}

/// `ŝ = 1 - F_{χ²_d}(z)` with `z = n ḡᵀ Σ̂⁻¹ ḡ`.
pub fn credible_value(g: &GradientMatrix, iteration: usize) -> Result<CredibleValue> {
    credible_value_scaled(g, iteration, 1.0)
}

/// As [`credible_value`] for a loss equal to `1/κ` times the negative
/// log-posterior; the statistic becomes `κ z`.
pub fn credible_value_scaled(g: &GradientMatrix, iteration: usize, kappa: f64) -> Result<CredibleValue> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::Domain(format!("loss scale must be positive, got {kappa}")));
    }
    let z = kappa * quad_stat(g)?.z;
    let s_hat = chi2_sf(z, g.d())?;
    Ok(CredibleValue { s_hat, z, iteration })
}
