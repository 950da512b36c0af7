//! Two steps of BO on the one-dimensional demo problem with EI, KG, and
//! rollout EI, starting from the fixed demo observations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rbo_core::acquisition::{eval_acquisition, AcquisitionKind, Incumbent};
use rbo_core::objectives::{demo1d_posterior, ObjectiveKind, ObjectiveSpec, DEMO1D_DESIGN};
use rbo_core::rollout::{rollout_acquisition, RolloutConfig};
use rbo_core::vr::make_zmatrix;
use serde::{Deserialize, Serialize};

use crate::bo::decide;
use crate::config::{DemoConfig, Method, ModelSpec, RunConfig};
use crate::error::Result;
use crate::seeds::mix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoPanel {
    pub policy: String,
    /// Acquisition on the grid under the initial posterior.
    pub acquisition: Vec<f64>,
    /// Points chosen at each step with their observed values.
    pub chosen: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoResult {
    pub observations: Vec<(f64, f64)>,
    pub grid: Vec<f64>,
    pub truth: Vec<f64>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub panels: Vec<DemoPanel>,
}

pub fn demo(cfg: &DemoConfig) -> Result<DemoResult> {
    cfg.validate()?;
    let spec = ObjectiveSpec::new(ObjectiveKind::Demo1D)?;
    let post = demo1d_posterior()?;
    let bounds = spec.bounds.clone();
    let grid: Vec<f64> = (0..cfg.grid).map(|i| i as f64 / (cfg.grid - 1) as f64).collect();
    let truth = grid.iter().map(|x| spec.value(&[*x])).collect::<rbo_core::Result<Vec<_>>>()?;
    let preds: Vec<_> = grid.iter().map(|x| post.predict(&[*x])).collect();
    let inc = Incumbent::of(&post);

    let methods = [
        Method::Single(AcquisitionKind::Ei),
        Method::Single(AcquisitionKind::Kg(cfg.kg_grid)),
        Method::RolloutEI(2),
    ];
    let mut panels = Vec::new();
    for method in methods {
        let mut run = RunConfig::new(spec.clone(), method, DEMO1D_DESIGN.len() + cfg.steps);
        run.init_design = Some(DEMO1D_DESIGN.len());
        run.mc_samples = Some(cfg.mc_samples);
        run.seed = cfg.seed;
        run.truncate_horizon = false;
        run.model = ModelSpec::Fixed {
            kernel: post.kernel().clone(),
            prior_mean: post.prior_mean(),
        };

        let acquisition = match method {
            Method::Single(kind) => grid
                .iter()
                .map(|x| eval_acquisition(&kind, &post, &[*x], inc, &bounds))
                .collect::<rbo_core::Result<Vec<_>>>()?,
            _ => {
                let rcfg = RolloutConfig {
                    vr: run.vr.clone(),
                    inner_seed: cfg.seed,
                    ..RolloutConfig::new(2, cfg.mc_samples, bounds.clone())
                };
                let z = make_zmatrix(cfg.mc_samples, 2, &rcfg.vr, cfg.seed)?;
                grid.iter()
                    .map(|x| rollout_acquisition(&post, &[*x], &rcfg, &z).map(|e| e.mean))
                    .collect::<rbo_core::Result<Vec<_>>>()?
            }
        };

        let mut current = post.clone();
        let mut chosen = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for step in 0..cfg.steps {
            let d = decide(&run, &current, &bounds, cfg.steps - step, mix(cfg.seed, step as u64), None, &mut rng)?;
            let y = spec.value(&d.x)?;
            current = current.fantasy_update(&d.x, y)?;
            chosen.push((d.x[0], y));
        }
        panels.push(DemoPanel {
            policy: method.to_string(),
            acquisition,
            chosen,
        });
    }

    Ok(DemoResult {
        observations: post.dataset().points().map(|p| p[0]).zip(post.dataset().values().iter().copied()).collect(),
        grid,
        truth,
        mean: preds.iter().map(|p| p.mean).collect(),
        sd: preds.iter().map(|p| p.std_dev()).collect(),
        panels,
    })
}
