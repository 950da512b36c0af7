//! Gaussian process regression with stationary ARD kernels.

mod fit;
mod kernel;
mod posterior;

pub use fit::{fit_hyperparameters, fit_hyperparameters_with, log_marginal_likelihood_grad, HyperBounds};
pub use kernel::{KernelFamily, KernelSpec};
pub use posterior::{
    log_marginal_likelihood, Dataset, GpPosterior, Prediction, PredictionGrad, PriorMean,
};
