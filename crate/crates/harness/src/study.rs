//! Several optimization methods run on a common objective and protocol.

use rayon::prelude::*;
use rbo_core::policy_search::{usage_histogram, PolicySet};
use serde::{Deserialize, Serialize};

use crate::bo::{run_bo_with, RunOptions, RunTrace};
use crate::config::{BoStudyConfig, Method, RunConfig};
use crate::error::Result;
use crate::stats::{mean_se, median};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyUsage {
    pub members: Vec<String>,
    /// `fractions[t][m]`: smoothed share of replications choosing member `m`
    /// at the `t`-th decision.
    pub fractions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    /// Mean best-so-far after each evaluation, with standard errors.
    pub curve: Vec<f64>,
    pub curve_se: Vec<Option<f64>>,
    pub final_best: Vec<f64>,
    pub median_final_best: f64,
    pub mean_final_best: f64,
    pub se_final_best: Option<f64>,
    pub median_simple_regret: Option<f64>,
    pub failed: Vec<usize>,
    pub usage: Option<PolicyUsage>,
    #[serde(skip)]
    pub traces: Vec<RunTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoStudyResult {
    pub replications: usize,
    pub budget: usize,
    pub methods: Vec<MethodResult>,
}

impl BoStudyResult {
    pub fn method(&self, label: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == label)
    }
}

pub fn run_replications(cfg: &RunConfig, opts: RunOptions) -> Result<Vec<RunTrace>> {
    cfg.validate()?;
    (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_bo_with(cfg, r, opts))
        .collect()
}

pub fn run_study(cfg: &BoStudyConfig, opts: RunOptions) -> Result<BoStudyResult> {
    cfg.validate()?;
    let mut methods = Vec::new();
    for run in cfg.runs() {
        log::info!("running {} x{}", run.method, run.replications);
        let traces = run_replications(&run, opts)?;
        methods.push(summarize(&run, cfg.usage_window, traces)?);
    }
    Ok(BoStudyResult {
        replications: cfg.replications,
        budget: cfg.budget,
        methods,
    })
}

fn summarize(run: &RunConfig, window: usize, traces: Vec<RunTrace>) -> Result<MethodResult> {
    let ok: Vec<&RunTrace> = traces.iter().filter(|t| t.summary.is_some()).collect();
    let (curve, curve_se) = (0..run.budget)
        .map(|i| mean_se(&ok.iter().map(|t| t.records[i].best_so_far).collect::<Vec<_>>()))
        .unzip();
    let final_best: Vec<f64> = ok.iter().map(|t| t.summary.as_ref().unwrap().final_best).collect();
    let regrets: Vec<f64> = ok
        .iter()
        .filter_map(|t| t.summary.as_ref().unwrap().simple_regret)
        .collect();
    let (mean_final_best, se_final_best) = mean_se(&final_best);
    let usage = match run.method {
        Method::PolicySearch(_) if !ok.is_empty() => {
            let set = match &run.policies {
                Some(p) => PolicySet::new(p.clone())?,
                None => PolicySet::standard(run.objective.dim()),
            };
            let choices: Vec<Vec<usize>> = ok.iter().map(|t| t.chosen.clone()).collect();
            Some(PolicyUsage {
                members: set.members.iter().map(|m| m.to_string()).collect(),
                fractions: usage_histogram(&choices, set.len(), window)?,
            })
        }
        _ => None,
    };
    Ok(MethodResult {
        method: run.method.to_string(),
        curve,
        curve_se,
        median_final_best: median(&final_best),
        mean_final_best,
        se_final_best,
        median_simple_regret: (!regrets.is_empty()).then(|| median(&regrets)),
        final_best,
        failed: traces.iter().filter(|t| t.summary.is_none()).map(|t| t.replication).collect(),
        usage,
        traces,
    })
}
