//! Benchmark objectives, all minimized.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{Dataset, GpPosterior, KernelFamily, KernelSpec, PriorMean};
use crate::inner_opt::BoxBounds;

/// Observation sites of the one-dimensional demo: the left part of the domain,
/// which holds the global minimum, is left unexplored.
pub const DEMO1D_DESIGN: [f64; 5] = [0.5, 0.55, 0.6, 0.8, 1.0];

/// Posterior of the demo problem: the five demo observations under a
/// Matern 5/2 kernel with lengthscale 0.1 and amplitude equal to the sample
/// variance of the observations.
pub fn demo1d_posterior() -> Result<GpPosterior> {
    let spec = ObjectiveSpec::new(ObjectiveKind::Demo1D)?;
    let points: Vec<Vec<f64>> = DEMO1D_DESIGN.iter().map(|x| vec![*x]).collect();
    let values = points.iter().map(|p| spec.value(p)).collect::<Result<Vec<_>>>()?;
    let data = Dataset::new(&points, &values)?;
    let m = data.mean_value();
    let var = values.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / values.len() as f64;
    let kernel = KernelSpec::new(KernelFamily::Matern52, vec![0.1], var, 1e-6)?;
    GpPosterior::new(&data, &kernel)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    Branin,
    Sixhump,
    Ackley(usize),
    Rastrigin(usize),
    /// `sum_i w_i x_i^2`.
    WeightedTwoNorm(Vec<f64>),
    /// `sin(20 x) + 20 (x - 0.3)^2` on `[0, 1]`.
    Demo1D,
    /// A lazily revealed sample path of a zero-mean GP.
    GpSampled { kernel: KernelSpec, seed: u64 },
}

impl ObjectiveKind {
    pub fn dim(&self) -> usize {
        match self {
            ObjectiveKind::Branin | ObjectiveKind::Sixhump => 2,
            ObjectiveKind::Ackley(d) | ObjectiveKind::Rastrigin(d) => *d,
            ObjectiveKind::WeightedTwoNorm(w) => w.len(),
            ObjectiveKind::Demo1D => 1,
            ObjectiveKind::GpSampled { kernel, .. } => kernel.dim(),
        }
    }

    pub fn default_bounds(&self) -> Result<BoxBounds> {
        let d = self.dim();
        match self {
            ObjectiveKind::Branin => BoxBounds::new(vec![-5.0, 0.0], vec![10.0, 15.0]),
            ObjectiveKind::Sixhump => BoxBounds::new(vec![-3.0, -2.0], vec![3.0, 2.0]),
            ObjectiveKind::Ackley(_) | ObjectiveKind::WeightedTwoNorm(_) => BoxBounds::cube(d, -5.0, 5.0),
            ObjectiveKind::Rastrigin(_) => BoxBounds::cube(d, -5.12, 5.12),
            ObjectiveKind::Demo1D | ObjectiveKind::GpSampled { .. } => BoxBounds::cube(d, 0.0, 1.0),
        }
    }

    /// A global minimizer and the minimum value, where known.
    pub fn known_min(&self) -> Option<(Vec<f64>, f64)> {
        let d = self.dim();
        match self {
            ObjectiveKind::Branin => Some((vec![PI, 2.275], 0.397_887_357_729_738_2)),
            ObjectiveKind::Sixhump => Some((
                vec![0.089_842_011_817_429_17, -0.712_656_405_622_466_9],
                -1.031_628_453_489_877_4,
            )),
            ObjectiveKind::Ackley(_) | ObjectiveKind::Rastrigin(_) | ObjectiveKind::WeightedTwoNorm(_) => {
                Some((vec![0.0; d], 0.0))
            }
            ObjectiveKind::Demo1D => Some((vec![0.241_484_445_034_657_16], -0.924_646_845_503_903_6)),
            ObjectiveKind::GpSampled { .. } => None,
        }
    }

    /// Noiseless value of a closed-form objective.
    fn closed_form(&self, x: &[f64]) -> Option<f64> {
        Some(match self {
            ObjectiveKind::Branin => {
                let (x1, x2) = (x[0], x[1]);
                let b = 5.1 / (4.0 * PI * PI);
                let c = 5.0 / PI;
                let t = 1.0 / (8.0 * PI);
                (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
            }
            ObjectiveKind::Sixhump => {
                let (x1, x2) = (x[0], x[1]);
                let x1s = x1 * x1;
                (4.0 - 2.1 * x1s + x1s * x1s / 3.0) * x1s + x1 * x2 + (-4.0 + 4.0 * x2 * x2) * x2 * x2
            }
            ObjectiveKind::Ackley(d) => {
                let n = *d as f64;
                let sq = x.iter().map(|v| v * v).sum::<f64>() / n;
                let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
                let e = 1f64.exp();
                20.0 * (1.0 - (-0.2 * sq.sqrt()).exp()) + (e - cs.exp())
            }
            ObjectiveKind::Rastrigin(_) => x
                .iter()
                .map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0)
                .sum(),
            ObjectiveKind::WeightedTwoNorm(w) => w.iter().zip(x).map(|(w, v)| w * v * v).sum(),
            ObjectiveKind::Demo1D => (20.0 * x[0]).sin() + 20.0 * (x[0] - 0.3).powi(2),
            ObjectiveKind::GpSampled { .. } => return None,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawObjective {
    kind: ObjectiveKind,
    #[serde(default)]
    bounds: Option<BoxBounds>,
    #[serde(default)]
    noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawObjective")]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub bounds: BoxBounds,
    pub noise_sd: f64,
    pub known_min: Option<(Vec<f64>, f64)>,
}

impl TryFrom<RawObjective> for ObjectiveSpec {
    type Error = Error;

    fn try_from(raw: RawObjective) -> Result<Self> {
        let mut spec = ObjectiveSpec::new(raw.kind)?;
        if let Some(b) = raw.bounds {
            spec = spec.with_bounds(b)?;
        }
        spec.with_noise(raw.noise_sd)
    }
}

impl ObjectiveSpec {
    /// Standard domain, no noise.
    pub fn new(kind: ObjectiveKind) -> Result<Self> {
        if kind.dim() == 0 {
            return Err(Error::invalid("objective dimension must be positive"));
        }
        if let ObjectiveKind::GpSampled { kernel, .. } = &kind {
            kernel.validate()?;
        }
        Ok(ObjectiveSpec {
            bounds: kind.default_bounds()?,
            known_min: kind.known_min(),
            kind,
            noise_sd: 0.0,
        })
    }

    /// Replaces the domain; the known minimum is dropped if it falls outside.
    pub fn with_bounds(mut self, bounds: BoxBounds) -> Result<Self> {
        if bounds.dim() != self.kind.dim() {
            return Err(Error::invalid("bounds dimension does not match the objective"));
        }
        if self.known_min.as_ref().is_some_and(|(x, _)| !bounds.contains(x)) {
            self.known_min = None;
        }
        self.bounds = bounds;
        Ok(self)
    }

    pub fn with_noise(mut self, noise_sd: f64) -> Result<Self> {
        if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
            return Err(Error::invalid("noise standard deviation must be finite and >= 0"));
        }
        self.noise_sd = noise_sd;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Noiseless value for the closed-form kinds.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.bounds.check(x)?;
        self.kind
            .closed_form(x)
            .ok_or_else(|| Error::invalid("GP-sampled objectives need an evaluation state"))
    }
}

/// Truth process of a GP-sampled objective: values are drawn on demand from
/// the posterior given everything revealed so far, so any finite set of
/// queries is one joint draw from the prior.
#[derive(Debug, Clone)]
pub struct GpSampledState {
    kernel: KernelSpec,
    revealed: Dataset,
    post: Option<GpPosterior>,
    rng: ChaCha8Rng,
}

impl GpSampledState {
    /// The kernel's noise is ignored: the path itself is noiseless.
    pub fn new(kernel: &KernelSpec, seed: u64) -> Result<Self> {
        let kernel = KernelSpec {
            noise: 0.0,
            ..kernel.clone()
        };
        kernel.validate()?;
        Ok(GpSampledState {
            revealed: Dataset::empty(kernel.dim()),
            kernel,
            post: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn revealed(&self) -> &Dataset {
        &self.revealed
    }
}

/// Value of the sample path at `x`, revealing it if new.
pub fn gp_sampled_eval(state: &mut GpSampledState, x: &[f64]) -> Result<f64> {
    if x.len() != state.kernel.dim() {
        return Err(Error::invalid("query dimension does not match the GP path"));
    }
    if let Some(i) = state.revealed.points().position(|p| p == x) {
        return Ok(state.revealed.values()[i]);
    }
    let z: f64 = state.rng.sample(StandardNormal);
    let y = match &state.post {
        None => state.kernel.amplitude.sqrt() * z,
        Some(p) => p.sample(x, z),
    };
    state.revealed.push(x, y)?;
    state.post = Some(match state.post.take() {
        None => GpPosterior::with_prior_mean(&state.revealed, &state.kernel, PriorMean::Constant(0.0))?,
        Some(p) => p.fantasy_update(x, y)?,
    });
    Ok(y)
}

/// An objective together with whatever state its evaluation needs.
#[derive(Debug, Clone)]
pub struct Objective {
    spec: ObjectiveSpec,
    gp: Option<GpSampledState>,
}

impl Objective {
    pub fn new(spec: ObjectiveSpec) -> Result<Self> {
        let gp = match &spec.kind {
            ObjectiveKind::GpSampled { kernel, seed } => Some(GpSampledState::new(kernel, *seed)?),
            _ => None,
        };
        Ok(Objective { spec, gp })
    }

    pub fn spec(&self) -> &ObjectiveSpec {
        &self.spec
    }

    pub fn bounds(&self) -> &BoxBounds {
        &self.spec.bounds
    }

    pub fn gp_state(&self) -> Option<&GpSampledState> {
        self.gp.as_ref()
    }
}

/// `f(x)` plus Gaussian noise of the configured scale drawn from `rng`.
pub fn eval_objective<R: Rng + ?Sized>(obj: &mut Objective, x: &[f64], rng: &mut R) -> Result<f64> {
    obj.spec.bounds.check(x)?;
    let f = match &mut obj.gp {
        Some(state) => gp_sampled_eval(state, x)?,
        None => obj.spec.value(x)?,
    };
    if obj.spec.noise_sd > 0.0 {
        let xi: f64 = rng.sample(StandardNormal);
        Ok(f + obj.spec.noise_sd * xi)
    } else {
        Ok(f)
    }
}
