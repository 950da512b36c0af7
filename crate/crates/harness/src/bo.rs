//! The outer Bayesian optimization loop.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbo_core::acquisition::{acq_argmax, AcquisitionKind, Incumbent};
use rbo_core::gp::{fit_hyperparameters, Dataset, GpPosterior, HyperBounds, PriorMean};
use rbo_core::inner_opt::{maximize_expensive, BoxBounds};
use rbo_core::objectives::{eval_objective, Objective, ObjectiveKind};
use rbo_core::policy_search::{select_policy, PolicySet, ARGMAX_RESTARTS};
use rbo_core::rollout::{rollout_acquisition, RolloutConfig};
use rbo_core::vr::make_zmatrix;
use serde::{Deserialize, Serialize};

use crate::config::{Method, ModelSpec, RunConfig};
use crate::error::{HarnessError, Result};
use crate::seeds::mix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    /// One-based evaluation count, initial design included.
    pub iteration: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub best_so_far: f64,
    pub wall_ms: Option<f64>,
    pub policy: Option<String>,
    pub estimate_mean: Option<f64>,
    pub estimate_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub final_best: f64,
    /// Best value of the initial design.
    pub init_best: f64,
    /// `init_best - final_best`: the sum of realized improvements.
    pub total_reward: f64,
    /// `final_best - f*`, when the optimum is known.
    pub simple_regret: Option<f64>,
    /// `(init_best - final_best) / (init_best - f*)`, when the optimum is known.
    pub gap_closed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub method: String,
    pub replication: usize,
    pub seed: u64,
    pub records: Vec<IterRecord>,
    /// Index into the policy set chosen at each policy-search decision.
    pub chosen: Vec<usize>,
    pub summary: Option<TraceSummary>,
    /// Set when the replication was aborted; `records` then stops short.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Fill `wall_ms`. Off by default because timings break bitwise
    /// reproducibility of the outputs.
    pub timing: bool,
}

pub(crate) struct Decision {
    pub(crate) x: Vec<f64>,
    pub(crate) policy: Option<String>,
    pub(crate) estimate: Option<(f64, f64)>,
    pub(crate) chosen: Option<usize>,
}

/// Runs replication `rep` of `cfg`. Failures inside the loop are recorded in
/// the trace; only an invalid configuration is returned as an error.
pub fn run_bo(cfg: &RunConfig, rep: usize) -> Result<RunTrace> {
    run_bo_with(cfg, rep, RunOptions::default())
}

pub fn run_bo_with(cfg: &RunConfig, rep: usize, opts: RunOptions) -> Result<RunTrace> {
    cfg.validate()?;
    let seed = cfg.seed.wrapping_add(rep as u64);
    let mut trace = RunTrace {
        method: cfg.method.to_string(),
        replication: rep,
        seed,
        records: Vec::with_capacity(cfg.budget),
        chosen: Vec::new(),
        summary: None,
        error: None,
    };
    match drive(cfg, seed, opts, &mut trace) {
        Ok(()) => {
            trace.summary = Some(summarize(cfg, &trace));
        }
        Err(e @ HarnessError::Config(_)) => return Err(e),
        Err(e) => {
            log::warn!("{} replication {rep} aborted: {e}", trace.method);
            trace.error = Some(e.to_string());
        }
    }
    Ok(trace)
}

fn summarize(cfg: &RunConfig, trace: &RunTrace) -> TraceSummary {
    let n0 = cfg.init_design();
    let init_best = trace.records[n0 - 1].best_so_far;
    let final_best = trace.records.last().map_or(init_best, |r| r.best_so_far);
    let f_star = cfg.objective.known_min.as_ref().map(|(_, f)| *f);
    TraceSummary {
        final_best,
        init_best,
        total_reward: init_best - final_best,
        simple_regret: f_star.map(|f| final_best - f),
        gap_closed: f_star.and_then(|f| {
            let span = init_best - f;
            (span > 0.0).then(|| (init_best - final_best) / span)
        }),
    }
}

fn objective_for(cfg: &RunConfig, rep: usize) -> Result<Objective> {
    let mut spec = cfg.objective.clone();
    // each replication draws its own sample path
    if let ObjectiveKind::GpSampled { seed, .. } = &mut spec.kind {
        *seed = seed.wrapping_add(rep as u64);
    }
    Ok(Objective::new(spec)?)
}

fn drive(cfg: &RunConfig, seed: u64, opts: RunOptions, trace: &mut RunTrace) -> Result<()> {
    let mut obj = objective_for(cfg, trace.replication)?;
    let bounds = obj.bounds().clone();
    let d = bounds.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Dataset::empty(d);
    let mut best = f64::INFINITY;

    let policy_set = match cfg.method {
        Method::PolicySearch(_) => Some(match &cfg.policies {
            Some(p) => PolicySet::new(p.clone())?,
            None => PolicySet::standard(d),
        }),
        _ => None,
    };

    for n in 0..cfg.budget {
        let start = Instant::now();
        let decision = if n < cfg.init_design() {
            Decision {
                x: uniform_point(&bounds, &mut rng),
                policy: None,
                estimate: None,
                chosen: None,
            }
        } else {
            let post = surrogate(cfg, &data, &bounds)?;
            decide(cfg, &post, &bounds, cfg.budget - n, mix(seed, n as u64), policy_set.as_ref(), &mut rng)?
        };
        let y = eval_objective(&mut obj, &decision.x, &mut rng)?;
        data.push(&decision.x, y)?;
        best = best.min(y);
        if let Some(c) = decision.chosen {
            trace.chosen.push(c);
        }
        trace.records.push(IterRecord {
            iteration: n + 1,
            x: decision.x,
            y,
            best_so_far: best,
            wall_ms: opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
            policy: decision.policy,
            estimate_mean: decision.estimate.map(|e| e.0),
            estimate_se: decision.estimate.map(|e| e.1),
        });
    }
    Ok(())
}

fn uniform_point(bounds: &BoxBounds, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let u: Vec<f64> = (0..bounds.dim()).map(|_| rng.random::<f64>()).collect();
    bounds.from_unit(&u)
}

pub(crate) fn surrogate(cfg: &RunConfig, data: &Dataset, bounds: &BoxBounds) -> Result<GpPosterior> {
    Ok(match &cfg.model {
        ModelSpec::Fitted { family } => {
            let hb = HyperBounds::from_data(data, bounds);
            let kernel = fit_hyperparameters(data, *family, &hb)?;
            GpPosterior::new(data, &kernel)?
        }
        ModelSpec::Fixed { kernel, prior_mean } => {
            GpPosterior::with_prior_mean(data, kernel, PriorMean::Constant(*prior_mean))?
        }
    })
}

pub(crate) fn decide(
    cfg: &RunConfig,
    post: &GpPosterior,
    bounds: &BoxBounds,
    remaining: usize,
    iter_seed: u64,
    policy_set: Option<&PolicySet>,
    rng: &mut ChaCha8Rng,
) -> Result<Decision> {
    let inc = Incumbent::of(post);
    let horizon = |h: usize| if cfg.truncate_horizon { h.min(remaining) } else { h };
    let rollout_cfg = |h: usize| RolloutConfig {
        vr: cfg.vr.clone(),
        inner_seed: iter_seed,
        ..RolloutConfig::new(h, cfg.mc_samples(), bounds.clone())
    };
    let single = |kind: AcquisitionKind| -> Result<Decision> {
        let r = acq_argmax(&kind, post, inc, bounds, ARGMAX_RESTARTS, iter_seed)?;
        Ok(Decision {
            x: r.x_best,
            policy: Some(kind.to_string()),
            estimate: None,
            chosen: None,
        })
    };
    match cfg.method {
        Method::RandomSearch => Ok(Decision {
            x: uniform_point(bounds, rng),
            policy: None,
            estimate: None,
            chosen: None,
        }),
        Method::Single(kind) => single(kind),
        Method::RolloutEI(h) => {
            let h = horizon(h);
            // horizon one is EI itself
            if h == 1 {
                return single(AcquisitionKind::Ei);
            }
            let rcfg = rollout_cfg(h);
            let zmat = make_zmatrix(rcfg.samples, h, &rcfg.vr, mix(iter_seed, 1))?;
            let ei = acq_argmax(&AcquisitionKind::Ei, post, inc, bounds, ARGMAX_RESTARTS, iter_seed)?;
            let mut scored: Vec<(Vec<f64>, f64, f64)> = Vec::new();
            let best = maximize_expensive(
                |x| {
                    // without common random numbers every candidate gets fresh variates
                    let fresh;
                    let z = if rcfg.vr.use_crn {
                        &zmat
                    } else {
                        fresh = make_zmatrix(rcfg.samples, h, &rcfg.vr, mix(iter_seed, 2 + scored.len() as u64))?;
                        &fresh
                    };
                    let (m, se) = match rollout_acquisition(post, x, &rcfg, z) {
                        Ok(est) => (est.mean, est.std_error),
                        Err(e) if e.is_numerical() => (f64::NEG_INFINITY, f64::NAN),
                        Err(e) => return Err(e),
                    };
                    scored.push((x.to_vec(), m, se));
                    Ok(m)
                },
                bounds,
                iter_seed,
                &[ei.x_best],
            )?;
            let se = scored
                .iter()
                .find(|(x, m, _)| *x == best.x_best && *m == best.f_best)
                .map_or(f64::NAN, |s| s.2);
            Ok(Decision {
                x: best.x_best,
                policy: Some(format!("rollout-h{h}")),
                estimate: Some((best.f_best, se)),
                chosen: None,
            })
        }
        Method::PolicySearch(h) => {
            let set = policy_set.expect("policy set is built for policy search");
            let h = horizon(h);
            let rcfg = rollout_cfg(h);
            let zmat = make_zmatrix(rcfg.samples, h, &rcfg.vr, mix(iter_seed, 1))?;
            let choice = select_policy(post, set, &rcfg, &zmat, iter_seed)?;
            let est = choice.scores[choice.chosen_index]
                .as_ref()
                .map(|e| (e.mean, e.std_error));
            Ok(Decision {
                x: choice.x_next,
                policy: Some(choice.chosen.to_string()),
                estimate: est,
                chosen: Some(choice.chosen_index),
            })
        }
    }
}
