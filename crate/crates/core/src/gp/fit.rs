use serde::{Deserialize, Serialize};

use super::kernel::{KernelFamily, KernelSpec};
use super::posterior::{Dataset, GpPosterior};
use crate::error::{Error, Result};
use crate::inner_opt::{latin_hypercube, local_ascent, BoxBounds, LocalOptions, Smooth};
use crate::linalg;

const FIT_SEED: u64 = 0x6a09_e667;

/// Box over the kernel hyperparameters, in natural (not log) units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperBounds {
    pub lengthscale: Vec<(f64, f64)>,
    pub amplitude: (f64, f64),
    pub noise: (f64, f64),
}

impl HyperBounds {
    /// Lengthscales in `[1e-2, 1e1]` times the domain width, amplitude in
    /// `[1e-3, 1e3]` and noise in `[1e-8, 1e-1]` times the sample variance of `y`.
    pub fn from_data(data: &Dataset, domain: &BoxBounds) -> Self {
        let ys = data.values();
        let n = ys.len();
        let mut var = if n >= 2 {
            let m = ys.iter().sum::<f64>() / n as f64;
            ys.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / (n - 1) as f64
        } else {
            1.0
        };
        if !(var > 1e-12) {
            var = 1.0;
        }
        HyperBounds {
            lengthscale: domain.widths().iter().map(|w| (1e-2 * w, 1e1 * w)).collect(),
            amplitude: (1e-3 * var, 1e3 * var),
            noise: (1e-8 * var, 1e-1 * var),
        }
    }

    fn log_box(&self) -> Result<BoxBounds> {
        let mut lo = Vec::with_capacity(self.lengthscale.len() + 2);
        let mut hi = Vec::with_capacity(self.lengthscale.len() + 2);
        for &(a, b) in self.lengthscale.iter().chain([&self.amplitude, &self.noise]) {
            if !(a > 0.0) {
                return Err(Error::invalid("hyperparameter bounds must be positive"));
            }
            lo.push(a.ln());
            hi.push(b.ln());
        }
        BoxBounds::new(lo, hi)
    }
}

fn spec_from_log(family: KernelFamily, theta: &[f64]) -> KernelSpec {
    let d = theta.len() - 2;
    KernelSpec {
        family,
        lengthscales: theta[..d].iter().map(|t| t.exp()).collect(),
        amplitude: theta[d].exp(),
        noise: theta[d + 1].exp(),
    }
}

/// Log marginal likelihood and its gradient with respect to
/// `(log l_1, ..., log l_d, log amplitude, log noise)`.
pub fn log_marginal_likelihood_grad(data: &Dataset, spec: &KernelSpec) -> Result<(f64, Vec<f64>)> {
    let post = GpPosterior::new(data, spec)?;
    let n = data.len();
    let d = spec.dim();
    let inv = linalg::cholesky_inverse(post.chol(), n);
    let a = post.weights();
    let mut grad = vec![0.0; d + 2];
    for i in 0..n {
        for j in 0..=i {
            let w = a[i] * a[j] - inv[i * n + j];
            // off-diagonal pairs appear twice in the trace
            let w = if i == j { 0.5 * w } else { w };
            let (xi, xj) = (data.point(i), data.point(j));
            let r2 = spec.scaled_r2(xi, xj);
            grad[d] += w * spec.of_r2(r2);
            if i != j {
                let dk = spec.d_of_r2(r2);
                for k in 0..d {
                    let t = (xi[k] - xj[k]) / spec.lengthscales[k];
                    grad[k] += w * dk * (-2.0 * t * t);
                }
            } else {
                grad[d + 1] += w * spec.noise;
            }
        }
    }
    Ok((post.log_marginal_likelihood(), grad))
}

struct Likelihood<'a> {
    data: &'a Dataset,
    family: KernelFamily,
}

impl Smooth for Likelihood<'_> {
    fn value(&self, theta: &[f64]) -> f64 {
        GpPosterior::new(self.data, &spec_from_log(self.family, theta))
            .map_or(f64::NEG_INFINITY, |p| p.log_marginal_likelihood())
    }

    fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        match log_marginal_likelihood_grad(self.data, &spec_from_log(self.family, theta)) {
            Ok((v, g)) => {
                grad.copy_from_slice(&g);
                v
            }
            Err(_) => {
                grad.iter_mut().for_each(|g| *g = 0.0);
                f64::NEG_INFINITY
            }
        }
    }
}

/// Maximum-likelihood kernel from 8 Latin-hypercube starts in log space.
pub fn fit_hyperparameters(
    data: &Dataset,
    family: KernelFamily,
    bounds: &HyperBounds,
) -> Result<KernelSpec> {
    fit_hyperparameters_with(data, family, bounds, 8, FIT_SEED)
}

pub fn fit_hyperparameters_with(
    data: &Dataset,
    family: KernelFamily,
    bounds: &HyperBounds,
    starts: usize,
    seed: u64,
) -> Result<KernelSpec> {
    if data.len() < 2 {
        return Err(Error::invalid("fitting needs at least two observations"));
    }
    if bounds.lengthscale.len() != data.dim() {
        return Err(Error::invalid("one lengthscale bound per input dimension is required"));
    }
    let log_box = bounds.log_box()?;
    let objective = Likelihood { data, family };
    let opts = LocalOptions {
        max_iter: 100,
        grad_tol: 1e-6,
        ..Default::default()
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for x0 in latin_hypercube(starts.max(1), &log_box, seed) {
        let Some(run) = local_ascent(&objective, &log_box, &x0, &opts) else {
            continue;
        };
        if run.f.is_finite() && best.as_ref().is_none_or(|(_, f)| run.f > *f) {
            best = Some((run.x, run.f));
        }
    }
    let (theta, _) = best.ok_or_else(|| {
        Error::numerical("log marginal likelihood was not finite at any start")
    })?;
    Ok(spec_from_log(family, &theta))
}
