//! Rollout on objectives drawn from a GP, with the surrogate's kernel either
//! matching the truth or not.

use rayon::prelude::*;
use rbo_core::inner_opt::BoxBounds;
use rbo_core::objectives::{ObjectiveKind, ObjectiveSpec};
use serde::{Deserialize, Serialize};

use crate::bo::{run_bo_with, RunOptions, RunTrace};
use crate::config::{Method, MismatchConfig, ModelSpec, RunConfig};
use crate::error::Result;
use crate::stats::mean_se;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchCell {
    pub truth: String,
    pub horizon: usize,
    pub mean_best: f64,
    /// `None` with a single replication.
    pub se_best: Option<f64>,
    pub mean_reward: f64,
    pub se_reward: Option<f64>,
    /// Mean best-so-far after each evaluation, with standard errors.
    pub curve: Vec<f64>,
    pub curve_se: Vec<Option<f64>>,
    pub completed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchResult {
    pub replications: usize,
    pub cells: Vec<MismatchCell>,
    #[serde(skip)]
    pub traces: Vec<(String, usize, Vec<RunTrace>)>,
}

impl MismatchResult {
    pub fn cell(&self, truth: &str, horizon: usize) -> Option<&MismatchCell> {
        self.cells.iter().find(|c| c.truth == truth && c.horizon == horizon)
    }
}

/// The run configuration of one cell. Replication `r` of every cell sees the
/// same sample path and initial design, so horizons are compared on common
/// objectives.
pub fn cell_config(cfg: &MismatchConfig, truth: &rbo_core::gp::KernelSpec, horizon: usize) -> Result<RunConfig> {
    let spec = ObjectiveSpec::new(ObjectiveKind::GpSampled {
        kernel: truth.clone(),
        seed: cfg.seed,
    })?
    .with_bounds(BoxBounds::unit(1))?;
    let mut run = RunConfig::new(spec, Method::RolloutEI(horizon), cfg.budget);
    run.init_design = cfg.init_design;
    run.mc_samples = Some(cfg.mc_samples.unwrap_or(200) * horizon);
    run.seed = cfg.seed;
    run.replications = cfg.replications;
    run.model = ModelSpec::Fixed {
        kernel: cfg.model_kernel.clone(),
        prior_mean: 0.0,
    };
    run.vr = cfg.vr.clone();
    Ok(run)
}

pub fn mismatch_study(cfg: &MismatchConfig, opts: RunOptions) -> Result<MismatchResult> {
    cfg.validate()?;
    let mut cells = Vec::new();
    let mut traces = Vec::new();
    for truth in cfg.truths() {
        for &h in &cfg.horizons {
            log::info!("mismatch study: truth {} horizon {h}", truth.label);
            let run = cell_config(cfg, &truth.kernel, h)?;
            let reps: Vec<RunTrace> = (0..cfg.replications)
                .into_par_iter()
                .map(|r| run_bo_with(&run, r, opts))
                .collect::<Result<_>>()?;
            cells.push(summarize_cell(&truth.label, h, cfg.budget, &reps));
            traces.push((truth.label.clone(), h, reps));
        }
    }
    Ok(MismatchResult {
        replications: cfg.replications,
        cells,
        traces,
    })
}

fn summarize_cell(truth: &str, horizon: usize, budget: usize, reps: &[RunTrace]) -> MismatchCell {
    let ok: Vec<&RunTrace> = reps.iter().filter(|t| t.summary.is_some()).collect();
    let best: Vec<f64> = ok.iter().map(|t| t.summary.as_ref().unwrap().final_best).collect();
    let reward: Vec<f64> = ok.iter().map(|t| t.summary.as_ref().unwrap().total_reward).collect();
    let (mean_best, se_best) = mean_se(&best);
    let (mean_reward, se_reward) = mean_se(&reward);
    let (curve, curve_se) = (0..budget)
        .map(|i| mean_se(&ok.iter().map(|t| t.records[i].best_so_far).collect::<Vec<_>>()))
        .unzip();
    MismatchCell {
        truth: truth.to_string(),
        horizon,
        mean_best,
        se_best,
        mean_reward,
        se_reward,
        curve,
        curve_se,
        completed: ok.len(),
        failed: reps.len() - ok.len(),
    }
}
