use crate::error::Result;
use crate::gp::GpPosterior;
use crate::inner_opt::BoxBounds;
use crate::linalg::dot;
use crate::vr::sobol_points;

/// Positive Gauss-Hermite nodes and weights (16-point rule, physicists'
/// weight `e^{-t^2}`); the rule is symmetric about zero.
pub const GH_HALF_NODES: [(f64, f64); 8] = [
    (0.273_481_046_138_152_44, 0.507_929_479_016_613_7),
    (0.822_951_449_144_655_9, 0.280_647_458_528_533_7),
    (1.380_258_539_198_880_9, 0.083_810_041_398_985_83),
    (1.951_787_990_916_253_9, 0.012_880_311_535_509_989),
    (2.546_202_157_847_481_4, 0.000_932_284_008_624_180_7),
    (3.176_999_161_979_956, 2.711_860_092_537_889_2e-5),
    (3.869_447_904_860_123, 2.320_980_844_865_203_2e-7),
    (4.688_738_939_305_819, 2.654_807_474_011_167_3e-10),
];

const MAX_GRID: usize = 4096;

pub(crate) fn default_grid_size(d: usize) -> usize {
    let mut n: usize = 1;
    for _ in 0..d {
        n = n.saturating_mul(30);
        if n >= MAX_GRID {
            return MAX_GRID;
        }
    }
    n
}

/// First `size` Sobol points scaled to the box.
pub fn kg_grid(bounds: &BoxBounds, size: usize) -> Result<Vec<Vec<f64>>> {
    Ok(sobol_points(size, bounds.dim())?
        .iter()
        .map(|u| bounds.from_unit(u))
        .collect())
}

/// Knowledge gradient over a fixed discrete grid.
///
/// After observing `y` at `x`, the posterior mean at grid point `g` moves to
/// `mu_g + b_g Z` with `b_g = cov(g, x) / sqrt(var(x) + noise)`. The score is
/// `min_g mu_g - E[min_g (mu_g + b_g Z)]`, with the expectation taken by
/// Gauss-Hermite quadrature.
pub struct KnowledgeGradient<'a> {
    post: &'a GpPosterior,
    grid: Vec<Vec<f64>>,
    /// `L^-1 k(X, g)` per grid point.
    white: Vec<Vec<f64>>,
    mu: Vec<f64>,
    mu_min: f64,
}

impl<'a> KnowledgeGradient<'a> {
    pub fn new(post: &'a GpPosterior, grid: Vec<Vec<f64>>) -> Self {
        let mut white = Vec::with_capacity(grid.len());
        let mut mu = Vec::with_capacity(grid.len());
        for g in &grid {
            let mut v = Vec::with_capacity(post.len());
            post.whitened_cross_cov(g, &mut v);
            mu.push(post.prior_mean() + dot(&v, post.white()));
            white.push(v);
        }
        let mu_min = mu.iter().copied().fold(f64::INFINITY, f64::min);
        KnowledgeGradient {
            post,
            grid,
            white,
            mu,
            mu_min,
        }
    }

    pub fn grid(&self) -> &[Vec<f64>] {
        &self.grid
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut v = Vec::with_capacity(self.post.len());
        self.post.whitened_cross_cov(x, &mut v);
        self.value_with(x, &v)
    }

    fn value_with(&self, x: &[f64], vx: &[f64]) -> f64 {
        let kernel = self.post.kernel();
        let amp = kernel.amplitude;
        let var_x = (amp - dot(vx, vx)).max(0.0);
        let denom2 = var_x + kernel.noise;
        if denom2 <= 1e-14 * amp {
            return 0.0;
        }
        let inv = 1.0 / denom2.sqrt();
        let b: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.white)
            .map(|(g, vg)| (kernel.k(g, x) - dot(vg, vx)) * inv)
            .collect();
        self.score(&b)
    }

    fn score(&self, b: &[f64]) -> f64 {
        let zmax = std::f64::consts::SQRT_2 * GH_HALF_NODES[7].0;
        // grid points that cannot attain the minimum at any node are dropped
        let upper = self
            .mu
            .iter()
            .zip(b)
            .map(|(m, s)| m + s.abs() * zmax)
            .fold(f64::INFINITY, f64::min);
        let kept: Vec<(f64, f64)> = self
            .mu
            .iter()
            .zip(b)
            .filter(|(m, s)| *m - s.abs() * zmax <= upper)
            .map(|(m, s)| (*m, *s))
            .collect();
        let mut expect = 0.0;
        for &(t, w) in &GH_HALF_NODES {
            let z = std::f64::consts::SQRT_2 * t;
            let (mut lo_plus, mut lo_minus) = (f64::INFINITY, f64::INFINITY);
            for &(m, s) in &kept {
                lo_plus = lo_plus.min(m + s * z);
                lo_minus = lo_minus.min(m - s * z);
            }
            expect += w * (lo_plus + lo_minus);
        }
        expect /= std::f64::consts::PI.sqrt();
        (self.mu_min - expect).max(0.0)
    }

    /// Index and value of the best grid point; ties go to the lowest index.
    pub fn grid_argmax(&self) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, x) in self.grid.iter().enumerate() {
            let v = self.value_with(x, &self.white[i]);
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }
}
