//! Closed-form myopic acquisition functions under the minimization convention.
//!
//! Every score is "larger is better": the next point is the maximizer.

mod kg;

pub use kg::{kg_grid, KnowledgeGradient, GH_HALF_NODES};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::GpPosterior;
use crate::inner_opt::{maximize_cheap, BoxBounds, OptResult, Smooth};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

pub fn normal_cdf(u: f64) -> f64 {
    0.5 * libm::erfc(-u / std::f64::consts::SQRT_2)
}

/// Expected improvement `E[(y* - Y)^+]` for `Y ~ N(m, s^2)`.
pub fn expected_improvement(m: f64, s: f64, y_star: f64) -> f64 {
    let diff = y_star - m;
    if s <= 0.0 {
        return diff.max(0.0);
    }
    let u = diff / s;
    (diff * normal_cdf(u) + s * normal_pdf(u)).max(0.0)
}

/// Probability of improvement `P(Y < y*)` for `Y ~ N(m, s^2)`.
pub fn probability_of_improvement(m: f64, s: f64, y_star: f64) -> f64 {
    if s <= 0.0 {
        return if m < y_star { 1.0 } else { 0.0 };
    }
    normal_cdf((y_star - m) / s)
}

/// Myopic acquisition functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AcquisitionKind {
    #[serde(rename = "EI")]
    Ei,
    #[serde(rename = "PI")]
    Pi,
    /// Lower confidence bound with exploration weight kappa, scored as `kappa s - m`.
    #[serde(rename = "UCB")]
    Ucb(f64),
    /// Knowledge gradient over a Sobol grid of the given size.
    #[serde(rename = "KG")]
    Kg(usize),
}

impl AcquisitionKind {
    /// Knowledge gradient with the default grid for dimension `d`.
    pub fn kg_default(d: usize) -> Self {
        AcquisitionKind::Kg(kg::default_grid_size(d))
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AcquisitionKind::Ucb(k) if !(k.is_finite() && k >= 0.0) => {
                Err(Error::invalid(format!("UCB kappa must be finite and >= 0, got {k}")))
            }
            AcquisitionKind::Kg(g) if g < 4 => {
                Err(Error::invalid(format!("KG grid needs at least 4 points, got {g}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AcquisitionKind::Ei => write!(f, "EI"),
            AcquisitionKind::Pi => write!(f, "PI"),
            AcquisitionKind::Ucb(k) => write!(f, "UCB-{k}"),
            AcquisitionKind::Kg(_) => write!(f, "KG"),
        }
    }
}

/// Best observed value so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incumbent {
    pub y_star: f64,
}

impl Incumbent {
    pub fn new(y_star: f64) -> Self {
        Incumbent { y_star }
    }

    pub fn of(post: &GpPosterior) -> Self {
        Incumbent {
            y_star: post.incumbent(),
        }
    }
}

/// Evaluates an acquisition at `x`. `bounds` is only consulted by KG, whose
/// grid fills the box.
pub fn eval_acquisition(
    kind: &AcquisitionKind,
    post: &GpPosterior,
    x: &[f64],
    inc: Incumbent,
    bounds: &BoxBounds,
) -> Result<f64> {
    kind.validate()?;
    let p = post.predict_checked(x)?;
    let (m, s) = (p.mean, p.std_dev());
    Ok(match *kind {
        AcquisitionKind::Ei => expected_improvement(m, s, inc.y_star),
        AcquisitionKind::Pi => probability_of_improvement(m, s, inc.y_star),
        AcquisitionKind::Ucb(kappa) => kappa * s - m,
        AcquisitionKind::Kg(g) => KnowledgeGradient::new(post, kg_grid(bounds, g)?).value(x),
    })
}

/// Closed-form value and input gradient for EI, PI and UCB.
fn closed_form_grad(
    kind: &AcquisitionKind,
    post: &GpPosterior,
    x: &[f64],
    y_star: f64,
    grad: &mut [f64],
) -> f64 {
    let pg = post.predict_with_grad(x);
    let s = pg.variance.sqrt();
    let ds = |i: usize| {
        if s > 0.0 {
            pg.d_variance[i] / (2.0 * s)
        } else {
            0.0
        }
    };
    match *kind {
        AcquisitionKind::Ei => {
            if s <= 0.0 {
                let on = pg.mean < y_star;
                for (g, dm) in grad.iter_mut().zip(&pg.d_mean) {
                    *g = if on { -dm } else { 0.0 };
                }
                return (y_star - pg.mean).max(0.0);
            }
            let u = (y_star - pg.mean) / s;
            let (cdf, pdf) = (normal_cdf(u), normal_pdf(u));
            for (i, g) in grad.iter_mut().enumerate() {
                *g = -cdf * pg.d_mean[i] + pdf * ds(i);
            }
            ((y_star - pg.mean) * cdf + s * pdf).max(0.0)
        }
        AcquisitionKind::Pi => {
            if s <= 0.0 {
                grad.iter_mut().for_each(|g| *g = 0.0);
                return probability_of_improvement(pg.mean, 0.0, y_star);
            }
            let u = (y_star - pg.mean) / s;
            let pdf = normal_pdf(u);
            for (i, g) in grad.iter_mut().enumerate() {
                *g = pdf * (-pg.d_mean[i] - u * ds(i)) / s;
            }
            normal_cdf(u)
        }
        AcquisitionKind::Ucb(kappa) => {
            for (i, g) in grad.iter_mut().enumerate() {
                *g = kappa * ds(i) - pg.d_mean[i];
            }
            kappa * s - pg.mean
        }
        AcquisitionKind::Kg(_) => unreachable!("KG has no closed form"),
    }
}

/// Input gradient of an acquisition. KG uses central differences with step
/// `1e-5` times the box width.
pub fn acquisition_gradient(
    kind: &AcquisitionKind,
    post: &GpPosterior,
    x: &[f64],
    inc: Incumbent,
    bounds: &BoxBounds,
) -> Result<Vec<f64>> {
    kind.validate()?;
    bounds.check(x)?;
    let mut grad = vec![0.0; x.len()];
    if let AcquisitionKind::Kg(g) = *kind {
        let kg = KnowledgeGradient::new(post, kg_grid(bounds, g)?);
        let mut probe = x.to_vec();
        for i in 0..x.len() {
            let h = 1e-5 * bounds.width(i);
            probe[i] = x[i] + h;
            let fp = kg.value(&probe);
            probe[i] = x[i] - h;
            let fm = kg.value(&probe);
            probe[i] = x[i];
            grad[i] = (fp - fm) / (2.0 * h);
        }
    } else {
        closed_form_grad(kind, post, x, inc.y_star, &mut grad);
    }
    Ok(grad)
}

/// A closed-form acquisition bound to a posterior, ready for local ascent.
pub struct BoundAcquisition<'a> {
    kind: AcquisitionKind,
    post: &'a GpPosterior,
    y_star: f64,
}

impl<'a> BoundAcquisition<'a> {
    pub fn new(kind: AcquisitionKind, post: &'a GpPosterior, inc: Incumbent) -> Result<Self> {
        kind.validate()?;
        if matches!(kind, AcquisitionKind::Kg(_)) {
            return Err(Error::invalid("KG is maximized by grid search"));
        }
        Ok(BoundAcquisition {
            kind,
            post,
            y_star: inc.y_star,
        })
    }
}

impl Smooth for BoundAcquisition<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let p = self.post.predict(x);
        let (m, s) = (p.mean, p.std_dev());
        match self.kind {
            AcquisitionKind::Ei => expected_improvement(m, s, self.y_star),
            AcquisitionKind::Pi => probability_of_improvement(m, s, self.y_star),
            AcquisitionKind::Ucb(kappa) => kappa * s - m,
            AcquisitionKind::Kg(_) => unreachable!(),
        }
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        closed_form_grad(&self.kind, self.post, x, self.y_star, grad)
    }
}

/// Maximizes an acquisition over the box: multistart local ascent for the
/// closed forms, exhaustive grid search for KG.
pub fn acq_argmax(
    kind: &AcquisitionKind,
    post: &GpPosterior,
    inc: Incumbent,
    bounds: &BoxBounds,
    restarts: usize,
    seed: u64,
) -> Result<OptResult> {
    kind.validate()?;
    if bounds.dim() != post.dim() {
        return Err(Error::invalid("bounds and posterior dimensions differ"));
    }
    match *kind {
        AcquisitionKind::Kg(g) => {
            let kg = KnowledgeGradient::new(post, kg_grid(bounds, g)?);
            let (i, f_best) = kg.grid_argmax();
            let x_best = kg.grid()[i].clone();
            Ok(OptResult {
                starts: vec![(x_best.clone(), f_best)],
                x_best,
                f_best,
                evals: kg.grid().len(),
            })
        }
        _ => maximize_cheap(&BoundAcquisition::new(*kind, post, inc)?, bounds, restarts, seed),
    }
}
