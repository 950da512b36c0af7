//! Non-myopic Bayesian optimization: Gaussian process surrogates, myopic and
//! rollout acquisition functions, variance-reduced Monte Carlo estimation and
//! policy search over acquisition functions.

pub mod acquisition;
pub mod error;
pub mod gp;
pub mod inner_opt;
mod linalg;
pub mod objectives;
pub mod policy_search;
pub mod rollout;
pub mod vr;

pub use error::{Error, Result};
