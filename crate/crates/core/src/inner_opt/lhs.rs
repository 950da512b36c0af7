use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BoxBounds;

/// Latin hypercube of `n` points: each dimension is cut into `n` equal strata
/// and every stratum receives exactly one uniformly jittered point.
pub fn latin_hypercube(n: usize, bounds: &BoxBounds, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    latin_hypercube_with(n, bounds, &mut rng)
}

pub(crate) fn latin_hypercube_with<R: Rng>(n: usize, bounds: &BoxBounds, rng: &mut R) -> Vec<Vec<f64>> {
    let d = bounds.dim();
    let mut pts = vec![vec![0.0; d]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        perm.shuffle(rng);
        let lo = bounds.lower()[j];
        let w = bounds.width(j);
        for (p, &stratum) in pts.iter_mut().zip(&perm) {
            let u = (stratum as f64 + rng.random::<f64>()) / n as f64;
            p[j] = (lo + u * w).clamp(lo, bounds.upper()[j]);
        }
    }
    pts
}
