use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;
const SQRT5: f64 = 2.236_067_977_499_79;

/// Stationary covariance families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelFamily {
    SquaredExponential,
    Matern52,
    Matern32,
}

/// A stationary ARD kernel plus observation noise.
///
/// Distances are measured after dividing each coordinate by its lengthscale,
/// so the family formulas below are evaluated with a unit lengthscale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscales: Vec<f64>,
    pub amplitude: f64,
    pub noise: f64,
}

impl KernelSpec {
    pub fn new(
        family: KernelFamily,
        lengthscales: Vec<f64>,
        amplitude: f64,
        noise: f64,
    ) -> Result<Self> {
        let spec = KernelSpec {
            family,
            lengthscales,
            amplitude,
            noise,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same lengthscale in every one of `dim` coordinates.
    pub fn isotropic(
        family: KernelFamily,
        dim: usize,
        lengthscale: f64,
        amplitude: f64,
        noise: f64,
    ) -> Result<Self> {
        Self::new(family, vec![lengthscale; dim], amplitude, noise)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.is_empty() {
            return Err(Error::invalid("kernel needs at least one lengthscale"));
        }
        if self
            .lengthscales
            .iter()
            .any(|l| !(l.is_finite() && *l > 0.0))
        {
            return Err(Error::invalid("lengthscales must be finite and positive"));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(Error::invalid("amplitude must be finite and positive"));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::invalid("noise must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Checked kernel evaluation `K(x, x2)`.
    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        if x.len() != self.dim() || x2.len() != self.dim() {
            return Err(Error::invalid(format!(
                "kernel of dimension {} evaluated at points of dimension {} and {}",
                self.dim(),
                x.len(),
                x2.len()
            )));
        }
        Ok(self.k(x, x2))
    }

    /// Unchecked evaluation; callers guarantee matching dimensions.
    #[inline]
    pub(crate) fn k(&self, x: &[f64], x2: &[f64]) -> f64 {
        self.of_r2(self.scaled_r2(x, x2))
    }

    #[inline]
    pub(crate) fn scaled_r2(&self, x: &[f64], x2: &[f64]) -> f64 {
        x.iter()
            .zip(x2)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let d = (a - b) / l;
                d * d
            })
            .sum()
    }

    /// Kernel value as a function of the squared scaled distance.
    #[inline]
    pub(crate) fn of_r2(&self, r2: f64) -> f64 {
        let a = self.amplitude;
        match self.family {
            KernelFamily::SquaredExponential => a * (-0.5 * r2).exp(),
            KernelFamily::Matern52 => {
                let r = r2.sqrt();
                a * (1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * (-SQRT5 * r).exp()
            }
            KernelFamily::Matern32 => {
                let r = r2.sqrt();
                a * (1.0 + SQRT3 * r) * (-SQRT3 * r).exp()
            }
        }
    }

    /// Derivative of the kernel with respect to the squared scaled distance.
    /// Finite at zero for all three families.
    #[inline]
    pub(crate) fn d_of_r2(&self, r2: f64) -> f64 {
        let a = self.amplitude;
        match self.family {
            KernelFamily::SquaredExponential => -0.5 * a * (-0.5 * r2).exp(),
            KernelFamily::Matern52 => {
                let r = r2.sqrt();
                -5.0 / 6.0 * a * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp()
            }
            KernelFamily::Matern32 => {
                let r = r2.sqrt();
                -1.5 * a * (-SQRT3 * r).exp()
            }
        }
    }

    /// Gradient of `K(x, x2)` with respect to `x`, accumulated as `out += scale * grad`.
    #[inline]
    pub(crate) fn add_grad_x(&self, x: &[f64], x2: &[f64], scale: f64, out: &mut [f64]) {
        let dk = self.d_of_r2(self.scaled_r2(x, x2)) * scale;
        for (((o, a), b), l) in out.iter_mut().zip(x).zip(x2).zip(&self.lengthscales) {
            *o += dk * 2.0 * (a - b) / (l * l);
        }
    }
}
