#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbo_core::gp::{Dataset, KernelFamily, KernelSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Kernel written out from the textbook formulas, independent of the library.
pub fn kernel_ref(spec: &KernelSpec, x: &[f64], y: &[f64]) -> f64 {
    let r2: f64 = x
        .iter()
        .zip(y)
        .zip(&spec.lengthscales)
        .map(|((a, b), l)| ((a - b) / l).powi(2))
        .sum();
    let r = r2.sqrt();
    let a = spec.amplitude;
    match spec.family {
        KernelFamily::SquaredExponential => a * (-r2 / 2.0).exp(),
        KernelFamily::Matern52 => {
            a * (1.0 + 5f64.sqrt() * r + 5.0 * r2 / 3.0) * (-(5f64.sqrt()) * r).exp()
        }
        KernelFamily::Matern32 => a * (1.0 + 3f64.sqrt() * r) * (-(3f64.sqrt()) * r).exp(),
    }
}

pub struct Dense {
    pub inv: DMatrix<f64>,
    pub resid: DVector<f64>,
    pub mean: f64,
    pub log_det: f64,
}

/// Dense-inverse model of `K + noise I` under a constant prior mean.
pub fn dense(data: &Dataset, spec: &KernelSpec, mean: f64) -> Dense {
    let n = data.len();
    let k = DMatrix::from_fn(n, n, |i, j| {
        kernel_ref(spec, data.point(i), data.point(j)) + if i == j { spec.noise } else { 0.0 }
    });
    let log_det = k.clone().lu().determinant().ln();
    let inv = k.try_inverse().expect("invertible");
    let resid = DVector::from_iterator(n, data.values().iter().map(|y| y - mean));
    Dense {
        inv,
        resid,
        mean,
        log_det,
    }
}

impl Dense {
    pub fn predict(&self, data: &Dataset, spec: &KernelSpec, x: &[f64]) -> (f64, f64) {
        let kx = DVector::from_iterator(data.len(), data.points().map(|p| kernel_ref(spec, x, p)));
        let m = self.mean + (kx.transpose() * &self.inv * &self.resid)[0];
        let v = kernel_ref(spec, x, x) - (kx.transpose() * &self.inv * &kx)[0];
        (m, v)
    }

    pub fn lml(&self) -> f64 {
        let n = self.resid.len() as f64;
        -0.5 * (self.resid.transpose() * &self.inv * &self.resid)[0]
            - 0.5 * self.log_det
            - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }
}

pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
    let ys: Vec<f64> = pts
        .iter()
        .map(|p| p.iter().map(|v| (5.0 * v).sin()).sum::<f64>() + rng.random::<f64>())
        .collect();
    Dataset::new(&pts, &ys).unwrap()
}

pub fn random_kernel(rng: &mut ChaCha8Rng, d: usize, noise: f64) -> KernelSpec {
    let family = match rng.random_range(0..3) {
        0 => KernelFamily::SquaredExponential,
        1 => KernelFamily::Matern52,
        _ => KernelFamily::Matern32,
    };
    KernelSpec::new(
        family,
        (0..d).map(|_| rng.random_range(0.2..1.0)).collect(),
        rng.random_range(0.5..2.0),
        noise,
    )
    .unwrap()
}

pub fn rel_close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

/// Latin-hypercube points kept to the middle half of their strata, so no two
/// points share a stratum edge; values are smooth plus an offset per point.
pub fn spread_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    use rand::seq::SliceRandom;
    let mut pts = vec![vec![0.0; d]; n];
    for j in 0..d {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        for (p, s) in pts.iter_mut().zip(&perm) {
            p[j] = (*s as f64 + 0.25 + 0.5 * rng.random::<f64>()) / n as f64;
        }
    }
    let ys: Vec<f64> = pts
        .iter()
        .map(|p| p.iter().map(|v| (5.0 * v).sin()).sum::<f64>() + rng.random::<f64>())
        .collect();
    Dataset::new(&pts, &ys).unwrap()
}
