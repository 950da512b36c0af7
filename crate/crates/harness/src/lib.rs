//! Experiment drivers built on `rbo-core`: the outer BO loop, variance and
//! model-mismatch studies, policy-search comparisons, and their CSV, JSON and
//! SVG outputs.

pub mod bo;
pub mod config;
pub mod demo;
pub mod error;
pub mod mismatch;
pub mod output;
pub mod seeds;
pub mod stats;
pub mod study;
pub mod svg;
pub mod variance;

pub use error::{HarnessError, Result};
