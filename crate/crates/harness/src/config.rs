//! Experiment configuration files. Every file is JSON; unknown keys are
//! rejected so that typos surface as config errors.

use std::fmt;
use std::path::Path;

use rbo_core::acquisition::AcquisitionKind;
use rbo_core::gp::{KernelFamily, KernelSpec};
use rbo_core::objectives::ObjectiveSpec;
use rbo_core::rollout::MAX_HORIZON;
use rbo_core::vr::VrConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    RandomSearch,
    Single(AcquisitionKind),
    RolloutEI(usize),
    PolicySearch(usize),
}

impl Method {
    pub fn horizon(&self) -> Option<usize> {
        match self {
            Method::RolloutEI(h) | Method::PolicySearch(h) => Some(*h),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Method::RandomSearch => Ok(()),
            Method::Single(k) => k.validate().map_err(HarnessError::from_config),
            Method::RolloutEI(h) | Method::PolicySearch(h) => {
                if *h == 0 || *h > MAX_HORIZON {
                    Err(HarnessError::Config(format!("horizon must be in 1..={MAX_HORIZON}, got {h}")))
                } else {
                    Ok(())
                }
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::RandomSearch => write!(f, "random"),
            Method::Single(k) => write!(f, "{k}"),
            Method::RolloutEI(h) => write!(f, "rollout-h{h}"),
            Method::PolicySearch(h) => write!(f, "PS{h}"),
        }
    }
}

/// How the surrogate is obtained at each iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelSpec {
    /// Maximum-likelihood refit before every decision, empirical prior mean.
    Fitted { family: KernelFamily },
    /// A known kernel and prior mean, never refit.
    Fixed { kernel: KernelSpec, prior_mean: f64 },
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Fitted {
            family: KernelFamily::Matern52,
        }
    }
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub objective: ObjectiveSpec,
    pub method: Method,
    pub budget: usize,
    /// Defaults to `2 d`.
    #[serde(default)]
    pub init_design: Option<usize>,
    /// Defaults to `200 h`.
    #[serde(default)]
    pub mc_samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub vr: VrConfig,
    /// Members for policy search; the standard set when absent.
    #[serde(default)]
    pub policies: Option<Vec<AcquisitionKind>>,
    /// Shorten the lookahead when fewer evaluations remain than the horizon.
    #[serde(default = "yes")]
    pub truncate_horizon: bool,
}

impl RunConfig {
    pub fn new(objective: ObjectiveSpec, method: Method, budget: usize) -> Self {
        RunConfig {
            objective,
            method,
            budget,
            init_design: None,
            mc_samples: None,
            seed: 0,
            replications: 1,
            model: ModelSpec::default(),
            vr: VrConfig::default(),
            policies: None,
            truncate_horizon: true,
        }
    }

    pub fn init_design(&self) -> usize {
        self.init_design.unwrap_or(2 * self.objective.dim())
    }

    pub fn mc_samples(&self) -> usize {
        self.mc_samples
            .unwrap_or(200 * self.method.horizon().unwrap_or(1))
    }

    pub fn validate(&self) -> Result<()> {
        self.method.validate()?;
        if self.init_design() == 0 {
            return Err(HarnessError::Config("init_design must be positive".into()));
        }
        if self.budget <= self.init_design() {
            return Err(HarnessError::Config(format!(
                "budget {} must exceed init_design {}",
                self.budget,
                self.init_design()
            )));
        }
        if self.mc_samples() == 0 {
            return Err(HarnessError::Config("mc_samples must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(HarnessError::Config("replications must be at least 1".into()));
        }
        self.vr.validate().map_err(HarnessError::from_config)?;
        if let ModelSpec::Fixed { kernel, prior_mean } = &self.model {
            kernel.validate().map_err(HarnessError::from_config)?;
            if kernel.dim() != self.objective.dim() || !prior_mean.is_finite() {
                return Err(HarnessError::Config("fixed model does not match the objective".into()));
            }
        }
        if let Some(p) = &self.policies {
            if p.is_empty() {
                return Err(HarnessError::Config("policy set must not be empty".into()));
            }
            for k in p {
                k.validate().map_err(HarnessError::from_config)?;
            }
        }
        Ok(())
    }
}

/// Several methods sharing one objective and protocol (`run-bo` and
/// `policy-search`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoStudyConfig {
    pub objective: ObjectiveSpec,
    pub methods: Vec<Method>,
    pub budget: usize,
    #[serde(default)]
    pub init_design: Option<usize>,
    /// Samples per unit of horizon; 200 when absent.
    #[serde(default)]
    pub mc_samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub vr: VrConfig,
    #[serde(default)]
    pub policies: Option<Vec<AcquisitionKind>>,
    #[serde(default = "yes")]
    pub truncate_horizon: bool,
    /// Box filter width of the policy usage histogram.
    #[serde(default = "usage_window")]
    pub usage_window: usize,
    /// Replications under `--paper-scale`.
    #[serde(default)]
    pub paper_replications: Option<usize>,
}

fn usage_window() -> usize {
    5
}

impl BoStudyConfig {
    pub fn runs(&self) -> Vec<RunConfig> {
        self.methods
            .iter()
            .map(|m| {
                let mc = match (self.mc_samples, m.horizon()) {
                    (Some(n), Some(h)) => Some(n * h),
                    _ => None,
                };
                RunConfig {
                    objective: self.objective.clone(),
                    method: *m,
                    budget: self.budget,
                    init_design: self.init_design,
                    mc_samples: mc,
                    seed: self.seed,
                    replications: self.replications,
                    model: self.model.clone(),
                    vr: self.vr.clone(),
                    policies: self.policies.clone(),
                    truncate_horizon: self.truncate_horizon,
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(HarnessError::Config("no methods given".into()));
        }
        if self.usage_window == 0 {
            return Err(HarnessError::Config("usage_window must be positive".into()));
        }
        let runs = self.runs();
        for r in &runs {
            r.validate()?;
        }
        let mut labels: Vec<String> = runs.iter().map(|r| r.method.to_string()).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != runs.len() {
            return Err(HarnessError::Config("methods must be distinct".into()));
        }
        Ok(())
    }

    pub fn apply_paper_scale(&mut self) {
        if let Some(r) = self.paper_replications {
            self.replications = r;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "MC")]
    Mc,
    #[serde(rename = "QMC")]
    Qmc,
    #[serde(rename = "QMC+CV")]
    QmcCv,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Mc, Estimator::Qmc, Estimator::QmcCv];
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Mc => "MC",
            Estimator::Qmc => "QMC",
            Estimator::QmcCv => "QMC+CV",
        })
    }
}

fn default_horizons() -> Vec<usize> {
    vec![2, 4, 6, 8]
}

fn default_ns() -> Vec<usize> {
    (1..=20).map(|i| 100 * i).collect()
}

fn trials() -> usize {
    20
}

fn ground_truth() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarStudyConfig {
    pub objective: ObjectiveSpec,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    #[serde(default = "default_ns")]
    pub ns: Vec<usize>,
    #[serde(default = "trials")]
    pub trials: usize,
    #[serde(default = "ground_truth")]
    pub ground_truth_samples: usize,
    /// Observations the surrogate is fitted to; defaults to `2 d`.
    #[serde(default)]
    pub data_points: Option<usize>,
    /// Points at which the rollout acquisition is estimated; defaults to `2 d`.
    #[serde(default)]
    pub eval_points: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub paper_trials: Option<usize>,
}

impl VarStudyConfig {
    pub fn data_points(&self) -> usize {
        self.data_points.unwrap_or(2 * self.objective.dim())
    }

    pub fn eval_points(&self) -> usize {
        self.eval_points.unwrap_or(2 * self.objective.dim())
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() || self.horizons.iter().any(|h| *h == 0 || *h > MAX_HORIZON) {
            return Err(HarnessError::Config(format!("horizons must be in 1..={MAX_HORIZON}")));
        }
        if self.ns.len() < 2 || self.ns.windows(2).any(|w| w[0] >= w[1]) || self.ns[0] < 4 {
            return Err(HarnessError::Config(
                "ns must hold at least two increasing sizes, the first at least 4".into(),
            ));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if self.ground_truth_samples < 4 {
            return Err(HarnessError::Config("ground_truth_samples must be at least 4".into()));
        }
        if self.data_points() < 2 || self.eval_points() == 0 {
            return Err(HarnessError::Config("need at least two data points and one evaluation point".into()));
        }
        Ok(())
    }

    pub fn apply_paper_scale(&mut self) {
        self.trials = self.paper_trials.unwrap_or(50);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthKernel {
    pub label: String,
    pub kernel: KernelSpec,
}

fn mismatch_budget() -> usize {
    7
}

fn mismatch_horizons() -> Vec<usize> {
    vec![1, 2, 3, 4, 5]
}

fn mismatch_replications() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MismatchConfig {
    pub model_kernel: KernelSpec,
    /// Truth processes; the model kernel itself is always run as "matched".
    #[serde(default)]
    pub truth_kernels: Vec<TruthKernel>,
    #[serde(default = "mismatch_horizons")]
    pub horizons: Vec<usize>,
    #[serde(default = "mismatch_budget")]
    pub budget: usize,
    #[serde(default)]
    pub init_design: Option<usize>,
    #[serde(default = "mismatch_replications")]
    pub replications: usize,
    /// Per unit of horizon; `200` when absent.
    #[serde(default)]
    pub mc_samples: Option<usize>,
    #[serde(default)]
    pub vr: VrConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub paper_replications: Option<usize>,
}

impl MismatchConfig {
    pub fn truths(&self) -> Vec<TruthKernel> {
        let mut all = vec![TruthKernel {
            label: "matched".into(),
            kernel: self.model_kernel.clone(),
        }];
        all.extend(self.truth_kernels.iter().cloned());
        all
    }

    pub fn validate(&self) -> Result<()> {
        self.model_kernel.validate().map_err(HarnessError::from_config)?;
        if self.model_kernel.dim() != 1 {
            return Err(HarnessError::Config("the mismatch study is one-dimensional".into()));
        }
        for t in &self.truth_kernels {
            t.kernel.validate().map_err(HarnessError::from_config)?;
            if t.kernel.dim() != 1 {
                return Err(HarnessError::Config(format!("truth kernel {} is not one-dimensional", t.label)));
            }
        }
        let mut labels: Vec<String> = self.truths().into_iter().map(|t| t.label).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.truth_kernels.len() + 1 {
            return Err(HarnessError::Config("truth labels must be distinct and not \"matched\"".into()));
        }
        if self.horizons.is_empty() || self.horizons.iter().any(|h| *h == 0 || *h > MAX_HORIZON) {
            return Err(HarnessError::Config(format!("horizons must be in 1..={MAX_HORIZON}")));
        }
        if self.replications == 0 {
            return Err(HarnessError::Config("replications must be at least 1".into()));
        }
        if self.budget <= self.init_design.unwrap_or(2) {
            return Err(HarnessError::Config("budget must exceed init_design".into()));
        }
        if self.mc_samples == Some(0) {
            return Err(HarnessError::Config("mc_samples must be at least 1".into()));
        }
        self.vr.validate().map_err(HarnessError::from_config)
    }

    pub fn apply_paper_scale(&mut self) {
        self.replications = self.paper_replications.unwrap_or(2000);
    }
}

fn demo_grid() -> usize {
    201
}

fn demo_steps() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoConfig {
    #[serde(default = "demo_steps")]
    pub steps: usize,
    #[serde(default = "demo_grid")]
    pub grid: usize,
    #[serde(default = "demo_samples")]
    pub mc_samples: usize,
    #[serde(default = "demo_kg")]
    pub kg_grid: usize,
    #[serde(default)]
    pub seed: u64,
}

fn demo_samples() -> usize {
    400
}

fn demo_kg() -> usize {
    200
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            steps: demo_steps(),
            grid: demo_grid(),
            mc_samples: demo_samples(),
            kg_grid: demo_kg(),
            seed: 0,
        }
    }
}

impl DemoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.grid < 2 || self.mc_samples < 4 || self.kg_grid < 4 {
            return Err(HarnessError::Config(
                "demo needs steps >= 1, grid >= 2, mc_samples >= 4 and kg_grid >= 4".into(),
            ));
        }
        Ok(())
    }
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}
