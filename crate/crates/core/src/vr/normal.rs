use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::sobol::Sobol;
use super::VrConfig;
use crate::error::{Error, Result};

/// Box-Muller map from a uniform pair to two independent standard normals.
pub fn box_muller(u1: f64, u2: f64) -> Result<(f64, f64)> {
    if !(u1 > 0.0 && u1 < 1.0 && u2 > 0.0 && u2 < 1.0) {
        return Err(Error::invalid(format!(
            "Box-Muller inputs must lie in (0,1), got ({u1}, {u2})"
        )));
    }
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    Ok((r * theta.cos(), r * theta.sin()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZProvenance {
    /// Box-Muller images of a Sobol sequence, optionally digitally shifted.
    Sobol { shifted: bool },
    PseudoRandom,
}

/// `N x h` matrix of standard-normal variates, one trajectory per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ZMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    provenance: ZProvenance,
    seed: u64,
}

impl ZMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("z-matrix rows must be non-empty and equally long"));
        }
        Ok(ZMatrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
            provenance: ZProvenance::PseudoRandom,
            seed: 0,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn provenance(&self) -> ZProvenance {
        self.provenance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The first `n` rows.
    pub fn truncated(&self, n: usize) -> ZMatrix {
        let n = n.min(self.rows);
        ZMatrix {
            rows: n,
            cols: self.cols,
            data: self.data[..n * self.cols].to_vec(),
            provenance: self.provenance,
            seed: self.seed,
        }
    }
}

/// Builds the variate matrix for `n` trajectories of horizon `h`.
///
/// With QMC on, rows are Box-Muller images of `h`-dimensional Sobol points
/// (padded to an even width; the surplus column is dropped). The seed only
/// matters for pseudo-random draws or when a digital shift is requested.
pub fn make_zmatrix(n: usize, h: usize, vr: &VrConfig, seed: u64) -> Result<ZMatrix> {
    if n == 0 || h == 0 {
        return Err(Error::invalid("z-matrix needs at least one row and column"));
    }
    let mut data = Vec::with_capacity(n * h);
    let provenance = if vr.use_qmc {
        let width = h + h % 2;
        let mut sobol = if vr.digital_shift {
            Sobol::with_digital_shift(width, seed)?
        } else {
            Sobol::new(width)?
        };
        let mut u = vec![0.0; width];
        let mut z = vec![0.0; width];
        for _ in 0..n {
            sobol.next_into(&mut u);
            for k in 0..width / 2 {
                let (a, b) = box_muller(u[2 * k], u[2 * k + 1])?;
                z[2 * k] = a;
                z[2 * k + 1] = b;
            }
            data.extend_from_slice(&z[..h]);
        }
        ZProvenance::Sobol {
            shifted: vr.digital_shift,
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        data.extend((0..n * h).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
        ZProvenance::PseudoRandom
    };
    Ok(ZMatrix {
        rows: n,
        cols: h,
        data,
        provenance,
        seed,
    })
}
