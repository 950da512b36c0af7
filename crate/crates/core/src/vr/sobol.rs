//! Gray-code Sobol sequence with Joe-Kuo direction numbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_SOBOL_DIM: usize = 20;

const BITS: usize = 32;
const SCALE: f64 = 1.0 / 4_294_967_296.0;

/// `(degree, coefficients, initial m)` for dimensions 2..=20 (new-joe-kuo-6.21201).
const DIRECTIONS: [(u32, u32, &[u32]); MAX_SOBOL_DIM - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
];

fn direction_vector(dim_index: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim_index == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (s, a, m) = DIRECTIONS[dim_index - 1];
    let s = s as usize;
    for k in 0..s {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut val = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                val ^= v[k - j];
            }
        }
        v[k] = val;
    }
    v
}

/// Streaming Sobol generator. The all-zero point is skipped, so the first point
/// produced is `(0.5, ..., 0.5)`.
#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    shift: Vec<u32>,
    produced: u64,
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_SOBOL_DIM {
            return Err(Error::invalid(format!(
                "Sobol dimension {dim} outside 1..={MAX_SOBOL_DIM}"
            )));
        }
        Ok(Sobol {
            directions: (0..dim).map(direction_vector).collect(),
            state: vec![0; dim],
            shift: vec![0; dim],
            produced: 0,
        })
    }

    /// Sequence XOR-ed with a random digital shift drawn from `seed`.
    pub fn with_digital_shift(dim: usize, seed: u64) -> Result<Self> {
        let mut s = Self::new(dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        s.shift.iter_mut().for_each(|v| *v = rng.random());
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }

    /// Writes the next point into `out`; coordinates lie strictly inside (0, 1).
    pub fn next_into(&mut self, out: &mut [f64]) {
        let c = self.produced.trailing_ones() as usize;
        assert!(c < BITS, "Sobol sequence exhausted");
        self.produced += 1;
        for ((x, dir), (o, sh)) in self
            .state
            .iter_mut()
            .zip(&self.directions)
            .zip(out.iter_mut().zip(&self.shift))
        {
            *x ^= dir[c];
            let bits = *x ^ sh;
            *o = if bits == 0 { 0.5 * SCALE } else { bits as f64 * SCALE };
        }
    }
}

/// First `n` Sobol points in `[0,1)^dim`, starting after the origin.
pub fn sobol_points(n: usize, dim: usize) -> Result<Vec<Vec<f64>>> {
    let mut s = Sobol::new(dim)?;
    Ok((0..n)
        .map(|_| {
            let mut p = vec![0.0; dim];
            s.next_into(&mut p);
            p
        })
        .collect())
}
