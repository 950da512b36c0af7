use serde::{Deserialize, Serialize};

use super::BetaMode;
use crate::error::{Error, Result};
use crate::linalg;

/// Covariance statistics behind a control-variate estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvStats {
    /// Row-major `m x m` sample covariance of the covariates.
    pub sigma_g: Vec<f64>,
    /// Sample covariance of each covariate with the target.
    pub sigma_gf: Vec<f64>,
    pub beta: Vec<f64>,
    pub known_means: Vec<f64>,
    /// Set when the covariance solve failed and the plain mean was used.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub stats: CvStats,
    /// The adjusted samples `f_i - beta^T (g_i - E[g])`.
    pub combined: Vec<f64>,
}

/// Mean and standard error of a sample; the error is `+inf` below two samples.
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::INFINITY);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Regression control-variate estimate of `E[f]`.
///
/// `covariates[j]` holds the `N` samples of covariate `j`, whose exact mean is
/// `known_means[j]`. Returns the mean of `f_i - beta^T (g_i - E[g])`.
pub fn cv_combine(
    f: &[f64],
    covariates: &[Vec<f64>],
    known_means: &[f64],
    mode: &BetaMode,
) -> Result<CvEstimate> {
    let n = f.len();
    let m = covariates.len();
    if known_means.len() != m {
        return Err(Error::invalid("one known mean per covariate is required"));
    }
    if covariates.iter().any(|g| g.len() != n) {
        return Err(Error::invalid("covariate sample counts must match the target"));
    }
    let mut stats = CvStats {
        sigma_g: vec![0.0; m * m],
        sigma_gf: vec![0.0; m],
        beta: vec![0.0; m],
        known_means: known_means.to_vec(),
        fallback: false,
    };
    if m > 0 && n >= 2 {
        let fm = f.iter().sum::<f64>() / n as f64;
        let gm: Vec<f64> = covariates.iter().map(|g| g.iter().sum::<f64>() / n as f64).collect();
        let denom = (n - 1) as f64;
        for a in 0..m {
            for b in 0..=a {
                let c = covariates[a]
                    .iter()
                    .zip(&covariates[b])
                    .map(|(x, y)| (x - gm[a]) * (y - gm[b]))
                    .sum::<f64>()
                    / denom;
                stats.sigma_g[a * m + b] = c;
                stats.sigma_g[b * m + a] = c;
            }
            stats.sigma_gf[a] = covariates[a]
                .iter()
                .zip(f)
                .map(|(x, y)| (x - gm[a]) * (y - fm))
                .sum::<f64>()
                / denom;
        }
    }
    match mode {
        BetaMode::Fixed(beta) => {
            if beta.len() != m {
                return Err(Error::invalid("fixed beta length must equal the covariate count"));
            }
            stats.beta = beta.clone();
        }
        BetaMode::Estimated if m > 0 => {
            if n < 4 {
                return Err(Error::invalid("estimating beta needs at least four samples"));
            }
            let trace: f64 = (0..m).map(|a| stats.sigma_g[a * m + a]).sum();
            let mut reg = stats.sigma_g.clone();
            for a in 0..m {
                reg[a * m + a] += 1e-10 * trace;
            }
            match linalg::spd_solve(&reg, m, &stats.sigma_gf) {
                Some(beta) if trace > 0.0 && beta.iter().all(|b| b.is_finite()) => stats.beta = beta,
                _ => stats.fallback = true,
            }
        }
        BetaMode::Estimated => {}
    }
    let combined: Vec<f64> = (0..n)
        .map(|i| {
            f[i] - (0..m)
                .map(|j| stats.beta[j] * (covariates[j][i] - known_means[j]))
                .sum::<f64>()
        })
        .collect();
    let (mean, std_error) = mean_and_std_error(&combined);
    Ok(CvEstimate {
        mean,
        std_error,
        stats,
        combined,
    })
}
