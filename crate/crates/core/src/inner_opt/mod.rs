//! Bound-constrained maximization of acquisition functions.
//!
//! Cheap acquisitions are maximized by multistart local ascent seeded from the
//! best points of a Latin hypercube; expensive, Monte Carlo estimated ones by a
//! small inner Bayesian optimization loop (see [`maximize_expensive`]).

mod bounds;
mod expensive;
mod lhs;
mod local;

pub use bounds::BoxBounds;
pub use expensive::{maximize_expensive, maximize_expensive_with, ExpensiveOptions};
pub use lhs::latin_hypercube;
pub use local::{local_ascent, LocalOptions, LocalResult};

use crate::error::{Error, Result};

/// A function to maximize, with its gradient.
pub trait Smooth {
    fn value(&self, x: &[f64]) -> f64;

    /// Returns the value and writes the gradient into `grad`.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

/// Adapts plain closures to [`Smooth`]; without a gradient closure the gradient
/// comes from central differences kept inside the box.
pub struct FnObjective<'b, F, G = fn(&[f64]) -> Vec<f64>> {
    f: F,
    grad: Option<G>,
    bounds: &'b BoxBounds,
}

impl<'b, F> FnObjective<'b, F>
where
    F: Fn(&[f64]) -> f64,
{
    pub fn new(f: F, bounds: &'b BoxBounds) -> Self {
        FnObjective {
            f,
            grad: None,
            bounds,
        }
    }
}

impl<'b, F, G> FnObjective<'b, F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    pub fn with_gradient(f: F, grad: G, bounds: &'b BoxBounds) -> Self {
        FnObjective {
            f,
            grad: Some(grad),
            bounds,
        }
    }
}

impl<F, G> Smooth for FnObjective<'_, F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let fx = (self.f)(x);
        match &self.grad {
            Some(g) => grad.copy_from_slice(&g(x)),
            None => {
                let mut probe = x.to_vec();
                for i in 0..x.len() {
                    let h = 1e-6 * self.bounds.width(i);
                    let hi = (x[i] + h).min(self.bounds.upper()[i]);
                    let lo = (x[i] - h).max(self.bounds.lower()[i]);
                    probe[i] = hi;
                    let fp = (self.f)(&probe);
                    probe[i] = lo;
                    let fm = (self.f)(&probe);
                    probe[i] = x[i];
                    grad[i] = (fp - fm) / (hi - lo);
                }
            }
        }
        fx
    }
}

/// Outcome of a maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub evals: usize,
    /// Start point and final value of every local run.
    pub starts: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct CheapOptions {
    pub restarts: usize,
    /// Design size per dimension.
    pub design_per_dim: usize,
    pub local: LocalOptions,
}

impl Default for CheapOptions {
    fn default() -> Self {
        CheapOptions {
            restarts: 5,
            design_per_dim: 10,
            local: LocalOptions::default(),
        }
    }
}

impl CheapOptions {
    pub fn with_restarts(restarts: usize) -> Self {
        CheapOptions {
            restarts,
            ..Default::default()
        }
    }
}

/// Multistart local ascent: evaluates a Latin hypercube of `10 d` points and
/// runs local ascent from the `restarts` best of them.
pub fn maximize_cheap<F: Smooth + ?Sized>(
    f: &F,
    bounds: &BoxBounds,
    restarts: usize,
    seed: u64,
) -> Result<OptResult> {
    maximize_cheap_with(f, bounds, &CheapOptions::with_restarts(restarts), seed)
}

pub fn maximize_cheap_with<F: Smooth + ?Sized>(
    f: &F,
    bounds: &BoxBounds,
    opts: &CheapOptions,
    seed: u64,
) -> Result<OptResult> {
    let n = (opts.design_per_dim * bounds.dim()).max(1);
    let design = latin_hypercube(n, bounds, seed);
    let values: Vec<f64> = design.iter().map(|x| f.value(x)).collect();
    let mut evals = n;
    let mut order: Vec<usize> = (0..n).filter(|&i| values[i].is_finite()).collect();
    // stable: ties keep design order
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut starts = Vec::new();
    for &i in order.iter().take(opts.restarts.max(1)) {
        let Some(run) = local_ascent(f, bounds, &design[i], &opts.local) else {
            continue;
        };
        evals += run.evals;
        // local ascent is monotone, but keep the design value if it was better
        let (x, fx) = if run.f >= values[i] {
            (run.x, run.f)
        } else {
            (design[i].clone(), values[i])
        };
        starts.push((design[i].clone(), fx));
        if best.as_ref().is_none_or(|(_, fb)| fx > *fb) {
            best = Some((x, fx));
        }
    }
    let (x_best, f_best) = best.ok_or_else(|| {
        Error::InvalidFunction("objective was not finite at any start point".into())
    })?;
    Ok(OptResult {
        x_best,
        f_best,
        evals,
        starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concave_quadratic_interior_maximum() {
        let b = BoxBounds::new(vec![-1.0, -2.0, 0.0], vec![2.0, 2.0, 1.0]).unwrap();
        let c = [0.3, -1.1, 0.77];
        let f = FnObjective::with_gradient(
            |x: &[f64]| -x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            |x: &[f64]| x.iter().zip(&c).map(|(a, b)| -2.0 * (a - b)).collect(),
            &b,
        );
        let r = maximize_cheap(&f, &b, 5, 1).unwrap();
        for (a, b) in r.x_best.iter().zip(&c) {
            assert!((a - b).abs() < 1e-5);
        }
        assert_eq!(r.starts.len(), 5);
    }

    #[test]
    fn boundary_maximum_lands_on_face() {
        let b = BoxBounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        // unconstrained peak at (1.5, 0.4) -> constrained at (1.0, 0.4)
        let f = FnObjective::new(|x: &[f64]| -(x[0] - 1.5).powi(2) - (x[1] - 0.4).powi(2), &b);
        let r = maximize_cheap(&f, &b, 3, 2).unwrap();
        assert!((r.x_best[0] - 1.0).abs() < 1e-6);
        assert!((r.x_best[1] - 0.4).abs() < 1e-5);
        assert!(b.contains(&r.x_best));
    }

    #[test]
    fn never_loses_to_the_design() {
        let b = BoxBounds::cube(2, -3.0, 3.0).unwrap();
        let f = FnObjective::new(|x: &[f64]| (3.0 * x[0]).sin() * (2.0 * x[1]).cos() - 0.05 * x[0] * x[0], &b);
        let r = maximize_cheap(&f, &b, 5, 9).unwrap();
        let design_best = latin_hypercube(20, &b, 9)
            .iter()
            .map(|x| f.value(x))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(r.f_best >= design_best);
        let max_start = r.starts.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.f_best, max_start);
    }

    #[test]
    fn all_non_finite_is_invalid_function() {
        let b = BoxBounds::unit(1);
        let f = FnObjective::new(|_: &[f64]| f64::NAN, &b);
        assert!(matches!(maximize_cheap(&f, &b, 3, 0), Err(Error::InvalidFunction(_))));
    }

    #[test]
    fn deterministic() {
        let b = BoxBounds::cube(2, -2.0, 2.0).unwrap();
        let f = FnObjective::new(|x: &[f64]| (x[0] * x[1]).cos() - 0.1 * x[0], &b);
        assert_eq!(maximize_cheap(&f, &b, 4, 3).unwrap(), maximize_cheap(&f, &b, 4, 3).unwrap());
    }
}
