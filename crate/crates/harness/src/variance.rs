//! Estimation error of the rollout acquisition as a function of the number
//! of samples, for plain Monte Carlo, shifted QMC, and QMC with control
//! variates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rbo_core::gp::{Dataset, GpPosterior};
use rbo_core::inner_opt::BoxBounds;
use rbo_core::objectives::{eval_objective, Objective};
use rbo_core::rollout::{estimate_from_samples, rollout_acquisition, rollout_samples, RolloutConfig};
use rbo_core::vr::{make_zmatrix, VrConfig};
use serde::{Deserialize, Serialize};

use crate::bo::surrogate;
use crate::config::{Estimator, Method, RunConfig, VarStudyConfig};
use crate::error::Result;
use crate::seeds::mix;
use crate::stats::{convergence_rate, mean_se, sign_test_p};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorCurve {
    pub estimator: Estimator,
    /// Mean absolute error over trials, one entry per sample size.
    pub mean_error: Vec<f64>,
    pub se_error: Vec<Option<f64>>,
    /// `p` in `error ~ N^-p`, fitted on all sample sizes.
    pub rate: f64,
    /// Per-trial error at the largest sample size.
    pub final_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonResult {
    pub horizon: usize,
    pub ground_truth: Vec<f64>,
    pub curves: Vec<EstimatorCurve>,
    /// MC error over QMC+CV error at the largest sample size.
    pub error_reduction: f64,
    /// MC error over QMC error at the largest sample size.
    pub qmc_reduction: f64,
    /// Trials (at the largest sample size) where MC beats QMC in error and
    /// where QMC beats QMC+CV, with one-sided sign-test p-values.
    pub mc_worse_than_qmc: usize,
    pub qmc_worse_than_cv: usize,
    pub p_mc_worse_than_qmc: f64,
    pub p_qmc_worse_than_cv: f64,
}

impl HorizonResult {
    pub fn curve(&self, e: Estimator) -> &EstimatorCurve {
        self.curves.iter().find(|c| c.estimator == e).expect("every estimator is run")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarStudyResult {
    pub ns: Vec<usize>,
    pub trials: usize,
    pub data: Vec<(Vec<f64>, f64)>,
    pub eval_points: Vec<Vec<f64>>,
    pub horizons: Vec<HorizonResult>,
}

fn shifted(vr: VrConfig) -> VrConfig {
    VrConfig {
        digital_shift: true,
        ..vr
    }
}

/// Runs the study. Each trial simulates the largest sample size once and
/// reads the smaller estimates off its prefixes; QMC and QMC+CV share the
/// same trajectories and differ only in how they are combined.
pub fn variance_study(cfg: &VarStudyConfig) -> Result<VarStudyResult> {
    cfg.validate()?;
    let mut obj = Objective::new(cfg.objective.clone())?;
    let bounds = obj.bounds().clone();
    let d = bounds.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let uniform = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        bounds.from_unit(&(0..d).map(|_| rng.random::<f64>()).collect::<Vec<_>>())
    };

    let mut data = Dataset::empty(d);
    for _ in 0..cfg.data_points() {
        let x = uniform(&mut rng);
        let y = eval_objective(&mut obj, &x, &mut rng)?;
        data.push(&x, y)?;
    }
    let eval_points: Vec<Vec<f64>> = (0..cfg.eval_points()).map(|_| uniform(&mut rng)).collect();
    let mut model_cfg = RunConfig::new(cfg.objective.clone(), Method::RandomSearch, 2);
    model_cfg.model = cfg.model.clone();
    let post = surrogate(&model_cfg, &data, &bounds)?;

    let mut horizons = Vec::new();
    for &h in &cfg.horizons {
        log::info!("variance study: horizon {h}");
        horizons.push(study_horizon(cfg, &post, &bounds, &eval_points, h)?);
    }
    Ok(VarStudyResult {
        ns: cfg.ns.clone(),
        trials: cfg.trials,
        data: data.points().map(|p| p.to_vec()).zip(data.values().iter().copied()).collect(),
        eval_points,
        horizons,
    })
}

fn study_horizon(
    cfg: &VarStudyConfig,
    post: &GpPosterior,
    bounds: &BoxBounds,
    points: &[Vec<f64>],
    h: usize,
) -> Result<HorizonResult> {
    let n_max = *cfg.ns.last().expect("validated");
    let hseed = mix(cfg.seed, h as u64);
    let base = RolloutConfig {
        inner_seed: hseed,
        ..RolloutConfig::new(h, n_max, bounds.clone())
    };
    let mc_cfg = RolloutConfig {
        vr: VrConfig::plain_mc(),
        ..base.clone()
    };
    let qmc_cfg = RolloutConfig {
        vr: shifted(VrConfig::qmc_only()),
        ..base.clone()
    };
    let cv_cfg = RolloutConfig {
        vr: shifted(VrConfig::default()),
        ..base.clone()
    };

    let mut truth = Vec::with_capacity(points.len());
    for (p, x) in points.iter().enumerate() {
        let gt_cfg = RolloutConfig {
            samples: cfg.ground_truth_samples,
            ..cv_cfg.clone()
        };
        let z = make_zmatrix(cfg.ground_truth_samples, h, &gt_cfg.vr, mix(hseed, 1_000_000 + p as u64))?;
        truth.push(rollout_acquisition(post, x, &gt_cfg, &z)?.mean);
    }

    // errors[estimator][trial][size], averaged over the evaluation points
    let k = cfg.ns.len();
    let mut errors = vec![vec![vec![0.0; k]; cfg.trials]; 3];
    for (p, x) in points.iter().enumerate() {
        let per_trial: Vec<[Vec<f64>; 3]> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> Result<[Vec<f64>; 3]> {
                let tseed = mix(hseed, (p * cfg.trials + t) as u64);
                let zm = make_zmatrix(n_max, h, &mc_cfg.vr, mix(tseed, 1))?;
                let zq = make_zmatrix(n_max, h, &qmc_cfg.vr, mix(tseed, 2))?;
                let mc = rollout_samples(post, x, &mc_cfg, &zm)?;
                let q = rollout_samples(post, x, &qmc_cfg, &zq)?;
                let mut out = [Vec::with_capacity(k), Vec::with_capacity(k), Vec::with_capacity(k)];
                for &n in &cfg.ns {
                    out[0].push((mean_se(&mc[..n]).0 - truth[p]).abs());
                    out[1].push((mean_se(&q[..n]).0 - truth[p]).abs());
                    let cv = estimate_from_samples(post, x, &cv_cfg, &zq.truncated(n), &q[..n])?;
                    out[2].push((cv.mean - truth[p]).abs());
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        for (t, errs) in per_trial.iter().enumerate() {
            for e in 0..3 {
                for j in 0..k {
                    errors[e][t][j] += errs[e][j] / points.len() as f64;
                }
            }
        }
    }

    let curves: Vec<EstimatorCurve> = Estimator::ALL
        .iter()
        .zip(&errors)
        .map(|(est, by_trial)| {
            let (mean_error, se_error): (Vec<f64>, Vec<Option<f64>>) = (0..k)
                .map(|j| mean_se(&by_trial.iter().map(|t| t[j]).collect::<Vec<_>>()))
                .unzip();
            EstimatorCurve {
                estimator: *est,
                rate: convergence_rate(&cfg.ns, &mean_error),
                final_errors: by_trial.iter().map(|t| t[k - 1]).collect(),
                mean_error,
                se_error,
            }
        })
        .collect();
    let last = |i: usize| curves[i].mean_error[k - 1];
    let wins = |a: usize, b: usize| {
        (0..cfg.trials)
            .filter(|&t| curves[a].final_errors[t] > curves[b].final_errors[t])
            .count()
    };
    let (w1, w2) = (wins(0, 1), wins(1, 2));
    Ok(HorizonResult {
        horizon: h,
        ground_truth: truth,
        error_reduction: last(0) / last(2),
        qmc_reduction: last(0) / last(1),
        mc_worse_than_qmc: w1,
        qmc_worse_than_cv: w2,
        p_mc_worse_than_qmc: sign_test_p(w1, cfg.trials),
        p_qmc_worse_than_cv: sign_test_p(w2, cfg.trials),
        curves,
    })
}
