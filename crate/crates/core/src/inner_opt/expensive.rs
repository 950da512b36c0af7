use super::{maximize_cheap, BoxBounds, OptResult};
use crate::acquisition::{BoundAcquisition, AcquisitionKind, Incumbent};
use crate::error::{Error, Result};
use crate::gp::{Dataset, GpPosterior, KernelFamily, KernelSpec, PriorMean};
use crate::vr::sobol_points;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpensiveOptions {
    /// Sobol design size per dimension.
    pub design_per_dim: usize,
    /// Inner BO iterations per dimension.
    pub iters_per_dim: usize,
    /// Restarts for the inner EI maximization.
    pub restarts: usize,
}

impl Default for ExpensiveOptions {
    fn default() -> Self {
        ExpensiveOptions {
            design_per_dim: 10,
            iters_per_dim: 50,
            restarts: 3,
        }
    }
}

/// Maximizes an expensive function with a small Bayesian optimization loop.
///
/// `f` is evaluated on a Sobol design of `10 d` points and on `extra_starts`,
/// then on `50 d` points proposed by EI on a GP surrogate with a fixed squared
/// exponential kernel (lengthscale a tenth of the box width). The best
/// evaluated point is returned; non-finite scores count as evaluations but are
/// otherwise ignored.
pub fn maximize_expensive<F>(
    f: F,
    bounds: &BoxBounds,
    seed: u64,
    extra_starts: &[Vec<f64>],
) -> Result<OptResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    maximize_expensive_with(f, bounds, seed, extra_starts, &ExpensiveOptions::default())
}

pub fn maximize_expensive_with<F>(
    mut f: F,
    bounds: &BoxBounds,
    seed: u64,
    extra_starts: &[Vec<f64>],
    opts: &ExpensiveOptions,
) -> Result<OptResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let d = bounds.dim();
    for x in extra_starts {
        bounds.check(x)?;
    }
    let mut design: Vec<Vec<f64>> = sobol_points((opts.design_per_dim * d).max(1), d)?
        .iter()
        .map(|u| bounds.from_unit(u))
        .collect();
    design.extend(extra_starts.iter().cloned());

    let mut evaluated: Vec<(Vec<f64>, f64)> = Vec::new();
    // the surrogate models -f so that EI (a minimization criterion) proposes maxima
    let mut data = Dataset::empty(d);
    for x in design {
        let v = f(&x)?;
        if v.is_finite() {
            data.push(&x, -v)?;
        }
        evaluated.push((x, v));
    }

    let iters = opts.iters_per_dim * d;
    if iters > 0 && !data.is_empty() {
        let ys = data.values();
        let mean = data.mean_value();
        let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / ys.len() as f64;
        let amp = if var > 1e-12 { var } else { 1.0 };
        let kernel = KernelSpec::new(
            KernelFamily::SquaredExponential,
            bounds.widths().iter().map(|w| 0.1 * w).collect(),
            amp,
            1e-6 * amp,
        )?;
        let mut post = GpPosterior::with_prior_mean(&data, &kernel, PriorMean::Constant(mean))?;
        for it in 0..iters {
            let acq = BoundAcquisition::new(AcquisitionKind::Ei, &post, Incumbent::of(&post))?;
            let next = maximize_cheap(&acq, bounds, opts.restarts, seed.wrapping_add(it as u64))?;
            let x = next.x_best;
            let v = f(&x)?;
            if v.is_finite() {
                post = post.fantasy_update(&x, -v)?;
            }
            evaluated.push((x, v));
        }
    }

    let mut best: Option<usize> = None;
    for (i, (_, v)) in evaluated.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|b| *v > evaluated[b].1) {
            best = Some(i);
        }
    }
    let b = best.ok_or_else(|| {
        Error::InvalidFunction("objective was not finite at any evaluated point".into())
    })?;
    Ok(OptResult {
        x_best: evaluated[b].0.clone(),
        f_best: evaluated[b].1,
        evals: evaluated.len(),
        starts: evaluated,
    })
}
