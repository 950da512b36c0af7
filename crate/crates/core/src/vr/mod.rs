//! Variance reduction for Monte Carlo rollout estimates: Sobol sequences,
//! Box-Muller normals, common random numbers and control variates.

mod cv;
mod normal;
mod sobol;

pub use cv::{cv_combine, mean_and_std_error, CvEstimate, CvStats};
pub use normal::{box_muller, make_zmatrix, ZMatrix, ZProvenance};
pub use sobol::{sobol_points, Sobol, MAX_SOBOL_DIM};

use serde::{Deserialize, Serialize};

use crate::acquisition::{expected_improvement, probability_of_improvement, Incumbent};
use crate::error::{Error, Result};
use crate::gp::GpPosterior;

/// First-step quantities with closed-form means, usable as control variates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Covariate {
    /// `(y* - y_1)^+`, mean EI.
    EiFirstStep,
    /// `1[y_1 < y*]`, mean PI.
    PiFirstStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BetaMode {
    Estimated,
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VrConfig {
    pub use_qmc: bool,
    /// Share one variate matrix across all candidates of an iteration.
    pub use_crn: bool,
    pub covariates: Vec<Covariate>,
    pub beta_mode: BetaMode,
    /// Randomize the Sobol sequence with a seeded digital shift.
    pub digital_shift: bool,
}

impl Default for VrConfig {
    /// QMC, CRN and the EI control variate.
    fn default() -> Self {
        VrConfig {
            use_qmc: true,
            use_crn: true,
            covariates: vec![Covariate::EiFirstStep],
            beta_mode: BetaMode::Estimated,
            digital_shift: false,
        }
    }
}

impl VrConfig {
    pub fn plain_mc() -> Self {
        VrConfig {
            use_qmc: false,
            use_crn: true,
            covariates: Vec::new(),
            beta_mode: BetaMode::Estimated,
            digital_shift: false,
        }
    }

    pub fn qmc_only() -> Self {
        VrConfig {
            covariates: Vec::new(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.covariates.iter().enumerate() {
            if self.covariates[..i].contains(c) {
                return Err(Error::invalid(format!("covariate {c:?} listed twice")));
            }
        }
        if let BetaMode::Fixed(b) = &self.beta_mode {
            if b.len() != self.covariates.len() {
                return Err(Error::invalid(format!(
                    "fixed beta has {} entries for {} covariates",
                    b.len(),
                    self.covariates.len()
                )));
            }
        }
        Ok(())
    }
}

/// Covariate samples driven by the same first-column variates as the
/// trajectories, with their exact means.
pub fn first_step_covariates(
    post: &GpPosterior,
    x: &[f64],
    inc: Incumbent,
    z_col: &[f64],
    covariates: &[Covariate],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let p = post.predict_checked(x)?;
    let (m, s) = (p.mean, p.std_dev());
    let y_star = inc.y_star;
    let mut samples = Vec::with_capacity(covariates.len());
    let mut means = Vec::with_capacity(covariates.len());
    for c in covariates {
        let (g, mean): (Vec<f64>, f64) = match c {
            Covariate::EiFirstStep => (
                z_col.iter().map(|z| (y_star - (m + s * z)).max(0.0)).collect(),
                expected_improvement(m, s, y_star),
            ),
            Covariate::PiFirstStep => (
                z_col
                    .iter()
                    .map(|z| if m + s * z < y_star { 1.0 } else { 0.0 })
                    .collect(),
                probability_of_improvement(m, s, y_star),
            ),
        };
        samples.push(g);
        means.push(mean);
    }
    Ok((samples, means))
}
