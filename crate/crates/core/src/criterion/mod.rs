//! The credible-value stopping criterion: credible value from a gradient
//! matrix, the stopping controller, and gradient-covariance uncertainty.

mod controller;
mod credible;
mod uncertainty;

pub use controller::{Decision, StopController, StopMode};
pub use credible::{credible_value, credible_value_scaled, CredibleValue};
pub use uncertainty::{parameter_uncertainties, uncertainty_of, UncertaintyEstimate};
