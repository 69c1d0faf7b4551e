//! Ground truth for validating the criterion: the exact Gaussian posterior
//! of a quadratic loss, and a random-walk Metropolis sampler for any model.

mod gaussian;
mod mcmc;

pub use gaussian::PosteriorOracle;
pub use mcmc::{mcmc_run, tune_step_scale, McmcChain, McmcConfig};
