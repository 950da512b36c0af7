//! Projected limited-memory quasi-Newton ascent on a box.

use std::collections::VecDeque;

use super::{BoxBounds, Smooth};
use crate::linalg::dot;

#[derive(Debug, Clone, Copy)]
pub struct LocalOptions {
    pub max_iter: usize,
    /// Infinity norm of the projected gradient at which the run stops.
    pub grad_tol: f64,
    pub memory: usize,
    pub armijo: f64,
}

impl Default for LocalOptions {
    fn default() -> Self {
        LocalOptions {
            max_iter: 200,
            grad_tol: 1e-8,
            memory: 10,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iterations: usize,
}

struct Memory {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    cap: usize,
}

impl Memory {
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        let scale = dot(&s, &s).sqrt() * dot(&y, &y).sqrt();
        if !(sy > 1e-12 * scale) || !sy.is_finite() {
            return;
        }
        if self.pairs.len() == self.cap {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// Two-loop recursion: approximates `H q` for the inverse curvature of the
    /// minimized function `-f`.
    fn apply(&self, q: &mut [f64]) {
        let k = self.pairs.len();
        let mut alphas = vec![0.0; k];
        for (i, (s, y, rho)) in self.pairs.iter().enumerate().rev() {
            let a = rho * dot(s, q);
            alphas[i] = a;
            for (qj, yj) in q.iter_mut().zip(y) {
                *qj -= a * yj;
            }
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for (i, (s, y, rho)) in self.pairs.iter().enumerate() {
            let b = rho * dot(y, q);
            for (qj, sj) in q.iter_mut().zip(s) {
                *qj += (alphas[i] - b) * sj;
            }
        }
    }
}

fn projected_grad_norm(x: &[f64], g: &[f64], b: &BoxBounds) -> f64 {
    x.iter()
        .zip(g)
        .enumerate()
        .map(|(i, (xi, gi))| ((xi + gi).clamp(b.lower()[i], b.upper()[i]) - xi).abs())
        .fold(0.0, f64::max)
}

/// Monotone bound-respecting ascent from `x0`. Returns `None` when the start is
/// not finite.
pub fn local_ascent<F: Smooth + ?Sized>(
    f: &F,
    bounds: &BoxBounds,
    x0: &[f64],
    opts: &LocalOptions,
) -> Option<LocalResult> {
    let d = bounds.dim();
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut g = vec![0.0; d];
    let mut fx = f.value_grad(&x, &mut g);
    let mut evals = 1;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let min_width = bounds.widths().into_iter().fold(f64::INFINITY, f64::min);
    let mut mem = Memory {
        pairs: VecDeque::with_capacity(opts.memory),
        cap: opts.memory.max(1),
    };
    let mut x_new = vec![0.0; d];
    let mut g_new = vec![0.0; d];
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if projected_grad_norm(&x, &g, bounds) <= opts.grad_tol {
            break;
        }
        iterations += 1;
        // variables pinned at a bound by an outward gradient stay fixed
        let free: Vec<bool> = (0..d)
            .map(|i| {
                !((x[i] <= bounds.lower()[i] && g[i] < 0.0)
                    || (x[i] >= bounds.upper()[i] && g[i] > 0.0))
            })
            .collect();
        let masked_g: Vec<f64> = g
            .iter()
            .zip(&free)
            .map(|(gi, &fr)| if fr { *gi } else { 0.0 })
            .collect();

        let mut accepted: Option<f64> = None;
        for attempt in 0..2 {
            let use_memory = attempt == 0 && !mem.pairs.is_empty();
            let mut dir = masked_g.clone();
            if use_memory {
                mem.apply(&mut dir);
                for (di, &fr) in dir.iter_mut().zip(&free) {
                    if !fr {
                        *di = 0.0;
                    }
                }
                if !(dot(&dir, &masked_g) > 0.0) {
                    continue;
                }
            }
            let dmax = dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(dmax > 0.0) || !dmax.is_finite() {
                break;
            }
            let mut step = if use_memory { 1.0 } else { 0.1 * min_width / dmax };
            for _ in 0..50 {
                for i in 0..d {
                    x_new[i] = x[i] + step * dir[i];
                }
                bounds.project(&mut x_new);
                let slope: f64 = x_new
                    .iter()
                    .zip(&x)
                    .zip(&g)
                    .map(|((a, b), gi)| (a - b) * gi)
                    .sum();
                if x_new == x || !(slope > 0.0) {
                    break;
                }
                let f_trial = f.value_grad(&x_new, &mut g_new);
                evals += 1;
                if f_trial.is_finite()
                    && g_new.iter().all(|v| v.is_finite())
                    && f_trial >= fx + opts.armijo * slope
                {
                    accepted = Some(f_trial);
                    break;
                }
                step *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
            mem.pairs.clear();
        }
        let Some(f_next) = accepted else { break };
        // gains at rounding level mean the gradient test can no longer be met
        let stalled = f_next - fx <= 4.0 * f64::EPSILON * fx.abs().max(1.0);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        // curvature pair for the minimized function -f
        let y: Vec<f64> = g.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        mem.push(s, y);
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_next;
        if stalled {
            break;
        }
    }
    Some(LocalResult {
        x,
        f: fx,
        evals,
        iterations,
    })
}
