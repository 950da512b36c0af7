//! Monte Carlo estimation of the rollout acquisition function.
//!
//! A trajectory starts by observing a fantasy value at the candidate point and
//! then follows the base policy on successively updated fantasy posteriors.
//! The horizon counts the candidate itself, so horizon one is plain EI.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{acq_argmax, AcquisitionKind, Incumbent};
use crate::error::{Error, Result};
use crate::gp::GpPosterior;
use crate::inner_opt::BoxBounds;
use crate::vr::{cv_combine, first_step_covariates, mean_and_std_error, CvStats, VrConfig, ZMatrix};

pub const MAX_HORIZON: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutConfig {
    pub horizon: usize,
    pub samples: usize,
    pub base_policy: AcquisitionKind,
    pub vr: VrConfig,
    pub bounds: BoxBounds,
    /// Local-ascent restarts when maximizing the base policy inside a trajectory.
    pub inner_restarts: usize,
    /// Seed of those inner maximizations. Held fixed so that the base policy is
    /// a deterministic function of the fantasy posterior.
    pub inner_seed: u64,
}

impl RolloutConfig {
    pub fn new(horizon: usize, samples: usize, bounds: BoxBounds) -> Self {
        RolloutConfig {
            horizon,
            samples,
            base_policy: AcquisitionKind::Ei,
            vr: VrConfig::default(),
            bounds,
            inner_restarts: 3,
            inner_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.horizon > MAX_HORIZON {
            return Err(Error::invalid(format!(
                "horizon must be in 1..={MAX_HORIZON}, got {}",
                self.horizon
            )));
        }
        if self.samples == 0 {
            return Err(Error::invalid("rollout needs at least one sample"));
        }
        self.base_policy.validate()?;
        self.vr.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub x: Vec<f64>,
    pub y: f64,
    pub y_star_before: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub steps: Vec<TrajectoryStep>,
    pub total_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_used: usize,
    /// Samples whose mean is the estimate (control-variate adjusted if any).
    pub per_sample: Option<Vec<f64>>,
    pub cv: Option<CvStats>,
}

/// Simulates one trajectory driven by the variates in `z_row`.
///
/// Fantasy values are noiseless draws `mean + sd z`; each one is conditioned on
/// with the kernel's noise before the next step. The kernel is never refit.
pub fn simulate_trajectory(
    post: &GpPosterior,
    x_first: &[f64],
    z_row: &[f64],
    cfg: &RolloutConfig,
) -> Result<TrajectoryRecord> {
    let h = cfg.horizon;
    if z_row.len() < h {
        return Err(Error::invalid(format!(
            "variate row of length {} is shorter than the horizon {h}",
            z_row.len()
        )));
    }
    cfg.bounds.check(x_first)?;
    let mut y_star = post.incumbent();
    let mut fantasy: Option<GpPosterior> = None;
    let mut steps = Vec::with_capacity(h);
    let mut total_reward = 0.0;
    for (t, &z) in z_row[..h].iter().enumerate() {
        let current = fantasy.as_ref().unwrap_or(post);
        let x = if t == 0 {
            x_first.to_vec()
        } else {
            acq_argmax(
                &cfg.base_policy,
                current,
                Incumbent::new(y_star),
                &cfg.bounds,
                cfg.inner_restarts,
                cfg.inner_seed,
            )
            .map_err(|e| Error::RolloutStep {
                step: t,
                source: Box::new(e),
            })?
            .x_best
        };
        let y = current.sample(&x, z);
        let reward = (y_star - y).max(0.0);
        total_reward += reward;
        if t + 1 < h {
            let next = current.fantasy_update(&x, y).map_err(|e| Error::RolloutStep {
                step: t,
                source: Box::new(e),
            })?;
            fantasy = Some(next);
        }
        steps.push(TrajectoryStep {
            x,
            y,
            y_star_before: y_star,
            reward,
        });
        y_star = y_star.min(y);
    }
    Ok(TrajectoryRecord {
        steps,
        total_reward,
    })
}

/// Total rewards of the trajectories started at `x`, one per row of `zmat`.
pub fn rollout_samples(
    post: &GpPosterior,
    x: &[f64],
    cfg: &RolloutConfig,
    zmat: &ZMatrix,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if zmat.cols() < cfg.horizon {
        return Err(Error::invalid(format!(
            "variate matrix has {} columns for horizon {}",
            zmat.cols(),
            cfg.horizon
        )));
    }
    (0..zmat.rows())
        .into_par_iter()
        .map(|i| simulate_trajectory(post, x, zmat.row(i), cfg).map(|r| r.total_reward))
        .collect()
}

/// Combines trajectory rewards into an estimate, applying the configured
/// control variates. `totals[i]` must come from row `i` of `zmat`.
pub fn estimate_from_samples(
    post: &GpPosterior,
    x: &[f64],
    cfg: &RolloutConfig,
    zmat: &ZMatrix,
    totals: &[f64],
) -> Result<RolloutEstimate> {
    let n = totals.len();
    let covs = &cfg.vr.covariates;
    if !covs.is_empty() && n >= 2 {
        let z_col: Vec<f64> = (0..n).map(|i| zmat.row(i)[0]).collect();
        let (g, means) = first_step_covariates(post, x, Incumbent::of(post), &z_col, covs)?;
        match cv_combine(totals, &g, &means, &cfg.vr.beta_mode) {
            Ok(est) => {
                return Ok(RolloutEstimate {
                    mean: est.mean,
                    std_error: est.std_error,
                    n_used: n,
                    per_sample: Some(est.combined),
                    cv: Some(est.stats),
                })
            }
            // too few samples to estimate beta: plain mean
            Err(Error::InvalidArgument(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let (mean, std_error) = mean_and_std_error(totals);
    Ok(RolloutEstimate {
        mean,
        std_error,
        n_used: n,
        per_sample: Some(totals.to_vec()),
        cv: None,
    })
}

/// Estimates the rollout acquisition at `x` from the trajectories driven by
/// the rows of `zmat`.
pub fn rollout_acquisition(
    post: &GpPosterior,
    x: &[f64],
    cfg: &RolloutConfig,
    zmat: &ZMatrix,
) -> Result<RolloutEstimate> {
    let totals = rollout_samples(post, x, cfg, zmat)?;
    estimate_from_samples(post, x, cfg, zmat, &totals)
}
