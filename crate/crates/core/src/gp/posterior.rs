use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, dot, row_offset};

/// Observed input/output pairs, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Dataset {
    pub fn new(points: &[Vec<f64>], values: &[f64]) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        let dim = points.first().map_or(0, Vec::len);
        let mut ds = Dataset::empty(dim);
        for (p, &y) in points.iter().zip(values) {
            ds.push(p, y)?;
        }
        Ok(ds)
    }

    pub fn empty(dim: usize) -> Self {
        Dataset {
            dim,
            xs: Vec::new(),
            ys: Vec::new(),
        }
    }

    pub fn push(&mut self, x: &[f64], y: f64) -> Result<()> {
        if self.is_empty() && self.dim == 0 {
            self.dim = x.len();
        }
        if x.len() != self.dim || self.dim == 0 {
            return Err(Error::invalid(format!(
                "point of dimension {} pushed into dataset of dimension {}",
                x.len(),
                self.dim
            )));
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset entries must be finite"));
        }
        self.xs.extend_from_slice(x);
        self.ys.push(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.xs.chunks_exact(self.dim.max(1))
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    /// Smallest observed value.
    pub fn min_value(&self) -> Option<f64> {
        self.ys.iter().copied().reduce(f64::min)
    }

    pub fn mean_value(&self) -> f64 {
        if self.ys.is_empty() {
            0.0
        } else {
            self.ys.iter().sum::<f64>() / self.ys.len() as f64
        }
    }
}

/// Constant prior mean of the GP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PriorMean {
    /// Mean of the observed values at construction time.
    Empirical,
    Constant(f64),
}

/// Posterior mean and latent-function variance at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl Prediction {
    pub fn std_dev(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }
}

/// Prediction with gradients of mean and variance with respect to the input.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionGrad {
    pub mean: f64,
    pub variance: f64,
    pub d_mean: Vec<f64>,
    pub d_variance: Vec<f64>,
}

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;
const MIN_PIVOT: f64 = 1e-12;

/// Immutable GP posterior conditioned on a dataset with a fixed kernel.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    kernel: KernelSpec,
    prior_mean: f64,
    data: Dataset,
    /// Packed lower factor of `K + (noise + jitter) I`.
    chol: Vec<f64>,
    /// `L^-1 (y - mean)`.
    white: Vec<f64>,
    /// `(K + noise I)^-1 (y - mean)`.
    alpha: Vec<f64>,
    jitter: f64,
}

impl GpPosterior {
    /// Conditions on `data` with the empirical constant prior mean.
    pub fn new(data: &Dataset, kernel: &KernelSpec) -> Result<Self> {
        Self::with_prior_mean(data, kernel, PriorMean::Empirical)
    }

    pub fn with_prior_mean(data: &Dataset, kernel: &KernelSpec, prior: PriorMean) -> Result<Self> {
        kernel.validate()?;
        if data.is_empty() {
            return Err(Error::invalid("posterior needs at least one observation"));
        }
        if data.dim() != kernel.dim() {
            return Err(Error::invalid(format!(
                "dataset dimension {} does not match kernel dimension {}",
                data.dim(),
                kernel.dim()
            )));
        }
        let prior_mean = match prior {
            PriorMean::Empirical => data.mean_value(),
            PriorMean::Constant(c) => c,
        };
        Self::factorize(kernel.clone(), prior_mean, data.clone(), 0.0)
    }

    fn factorize(kernel: KernelSpec, prior_mean: f64, data: Dataset, min_jitter: f64) -> Result<Self> {
        let n = data.len();
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = kernel.k(data.point(i), data.point(j));
                gram[i * n + j] = v;
                gram[j * n + i] = v;
            }
        }
        let (chol, jitter) = factor_with_jitter(&mut gram, n, &kernel, min_jitter)?;
        let resid: Vec<f64> = data.values().iter().map(|y| y - prior_mean).collect();
        let mut white = resid.clone();
        linalg::solve_lower(&chol, &mut white);
        let mut alpha = white.clone();
        linalg::solve_lower_transpose(&chol, &mut alpha);
        // one step of iterative refinement keeps interpolation tight when the
        // Gram matrix is badly conditioned
        let mut correction: Vec<f64> = (0..n)
            .map(|i| resid[i] - dot(&gram[i * n..(i + 1) * n], &alpha))
            .collect();
        linalg::solve_lower(&chol, &mut correction);
        linalg::solve_lower_transpose(&chol, &mut correction);
        alpha.iter_mut().zip(&correction).for_each(|(a, c)| *a += c);
        Ok(GpPosterior {
            kernel,
            prior_mean,
            data,
            chol,
            white,
            alpha,
            jitter,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Diagonal jitter that was needed to factorize the covariance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn weights(&self) -> &[f64] {
        &self.alpha
    }

    /// Lower Cholesky factor of `K + sigma^2 I` as a dense row-major matrix.
    pub fn cholesky_dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            let ri = row_offset(i);
            out[i * n..i * n + i + 1].copy_from_slice(&self.chol[ri..ri + i + 1]);
        }
        out
    }

    /// Minimum observed value of the conditioning data.
    pub fn incumbent(&self) -> f64 {
        self.data.min_value().unwrap_or(f64::INFINITY)
    }

    pub(crate) fn cross_cov(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.data.points().map(|p| self.kernel.k(x, p)));
    }

    /// `L^-1 k(x)`; the building block of every variance computation.
    pub(crate) fn whitened_cross_cov(&self, x: &[f64], out: &mut Vec<f64>) {
        self.cross_cov(x, out);
        linalg::solve_lower(&self.chol, out);
    }

    pub(crate) fn white(&self) -> &[f64] {
        &self.white
    }

    /// Posterior mean and latent variance at `x`.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        let mut v = Vec::with_capacity(self.len());
        self.cross_cov(x, &mut v);
        let mean = self.prior_mean + dot(&v, &self.alpha);
        linalg::solve_lower(&self.chol, &mut v);
        let prior_var = self.kernel.amplitude;
        let variance = (prior_var - dot(&v, &v)).clamp(0.0, prior_var);
        Prediction { mean, variance }
    }

    /// Checked prediction.
    pub fn predict_checked(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "query of dimension {} against posterior of dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(self.predict(x))
    }

    /// Posterior mean only; O(n).
    pub fn predict_mean(&self, x: &[f64]) -> f64 {
        self.prior_mean
            + self
                .data
                .points()
                .zip(&self.alpha)
                .map(|(p, a)| a * self.kernel.k(x, p))
                .sum::<f64>()
    }

    /// Prediction together with input gradients of mean and variance.
    pub fn predict_with_grad(&self, x: &[f64]) -> PredictionGrad {
        let n = self.len();
        let d = self.dim();
        let mut kx = Vec::with_capacity(n);
        self.cross_cov(x, &mut kx);
        let mean = self.prior_mean + dot(&kx, &self.alpha);
        let mut v = kx;
        linalg::solve_lower(&self.chol, &mut v);
        let prior_var = self.kernel.amplitude;
        let raw_var = prior_var - dot(&v, &v);
        let variance = raw_var.clamp(0.0, prior_var);
        // beta = (K + s I)^-1 k(x)
        let mut beta = v;
        linalg::solve_lower_transpose(&self.chol, &mut beta);
        let mut d_mean = vec![0.0; d];
        let mut d_variance = vec![0.0; d];
        for (i, p) in self.data.points().enumerate() {
            self.kernel.add_grad_x(x, p, self.alpha[i], &mut d_mean);
            self.kernel.add_grad_x(x, p, -2.0 * beta[i], &mut d_variance);
        }
        if raw_var <= 0.0 {
            d_variance.iter_mut().for_each(|g| *g = 0.0);
        }
        PredictionGrad {
            mean,
            variance,
            d_mean,
            d_variance,
        }
    }

    /// Posterior covariance between two points.
    pub fn covariance(&self, x: &[f64], x2: &[f64]) -> f64 {
        let mut v1 = Vec::with_capacity(self.len());
        let mut v2 = Vec::with_capacity(self.len());
        self.whitened_cross_cov(x, &mut v1);
        self.whitened_cross_cov(x2, &mut v2);
        self.kernel.k(x, x2) - dot(&v1, &v2)
    }

    /// Draws a value at `x` by scale-and-shift of the standard-normal variate `z`.
    pub fn sample(&self, x: &[f64], z: f64) -> f64 {
        let p = self.predict(x);
        p.mean + p.std_dev() * z
    }

    /// Conditions on one more observation with the same kernel and prior mean.
    ///
    /// Extends the Cholesky factor by one row; falls back to a full
    /// refactorization when the new pivot is too small.
    pub fn fantasy_update(&self, x: &[f64], y: f64) -> Result<GpPosterior> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "update of dimension {} against posterior of dimension {}",
                x.len(),
                self.dim()
            )));
        }
        if !y.is_finite() {
            return Err(Error::invalid("fantasy value must be finite"));
        }
        let mut data = self.data.clone();
        data.push(x, y)?;

        let mut l = Vec::with_capacity(self.len() + 1);
        self.whitened_cross_cov(x, &mut l);
        let diag = self.kernel.amplitude + self.kernel.noise + self.jitter;
        let pivot = diag - dot(&l, &l);
        if !(pivot > MIN_PIVOT * self.kernel.amplitude) {
            return Self::factorize(self.kernel.clone(), self.prior_mean, data, self.jitter);
        }
        let lnn = pivot.sqrt();
        let w_new = (y - self.prior_mean - dot(&l, &self.white)) / lnn;

        let mut chol = Vec::with_capacity(self.chol.len() + l.len() + 1);
        chol.extend_from_slice(&self.chol);
        chol.extend_from_slice(&l);
        chol.push(lnn);
        let mut white = Vec::with_capacity(self.white.len() + 1);
        white.extend_from_slice(&self.white);
        white.push(w_new);
        let mut alpha = white.clone();
        linalg::solve_lower_transpose(&chol, &mut alpha);
        Ok(GpPosterior {
            kernel: self.kernel.clone(),
            prior_mean: self.prior_mean,
            data,
            chol,
            white,
            alpha,
            jitter: self.jitter,
        })
    }
}

/// Cholesky of `gram + (noise + jitter) I`, escalating the jitter tenfold from
/// `1e-10 * amplitude` up to `1e-4 * amplitude`.
fn factor_with_jitter(
    gram: &mut [f64],
    n: usize,
    kernel: &KernelSpec,
    min_jitter: f64,
) -> Result<(Vec<f64>, f64)> {
    let amp = kernel.amplitude;
    let min_pivot = MIN_PIVOT * amp;
    let mut jitter = min_jitter;
    loop {
        for i in 0..n {
            gram[i * n + i] = amp + kernel.noise + jitter;
        }
        if let Some(l) = linalg::cholesky_packed(gram, n, min_pivot) {
            return Ok((l, jitter));
        }
        jitter = if jitter <= 0.0 {
            JITTER_START * amp
        } else {
            jitter * 10.0
        };
        if jitter > JITTER_MAX * amp * (1.0 + 1e-9) {
            return Err(Error::numerical(format!(
                "covariance of {n} points is not positive definite after maximum jitter"
            )));
        }
    }
}

/// Standard GP log marginal likelihood under the empirical constant prior mean.
pub fn log_marginal_likelihood(data: &Dataset, kernel: &KernelSpec) -> Result<f64> {
    let post = GpPosterior::new(data, kernel)?;
    Ok(post.log_marginal_likelihood())
}

impl GpPosterior {
    /// Log marginal likelihood of the conditioning data under this model.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.len();
        let log_det: f64 = (0..n).map(|i| self.chol[row_offset(i) + i].ln()).sum();
        -0.5 * dot(&self.white, &self.white)
            - log_det
            - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
    }

    pub(crate) fn chol(&self) -> &[f64] {
        &self.chol
    }
}
