//! Dense helpers on packed lower-triangular storage.
//!
//! Row `i` of a packed factor occupies `l[i*(i+1)/2 .. i*(i+1)/2 + i + 1]`, so a
//! factor grows by one row with a plain `extend`.

#[inline]
pub(crate) fn row_offset(i: usize) -> usize {
    i * (i + 1) / 2
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cholesky factor of a symmetric `n x n` row-major matrix. Returns `None` when a
/// pivot falls at or below `min_pivot`.
pub(crate) fn cholesky_packed(a: &[f64], n: usize, min_pivot: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; row_offset(n)];
    for i in 0..n {
        let ri = row_offset(i);
        for j in 0..=i {
            let rj = row_offset(j);
            let s = a[i * n + j] - dot(&l[ri..ri + j], &l[rj..rj + j]);
            if i == j {
                if !(s > min_pivot) || !s.is_finite() {
                    return None;
                }
                l[ri + i] = s.sqrt();
            } else {
                l[ri + j] = s / l[rj + j];
            }
        }
    }
    Some(l)
}

/// Solves `L x = b` in place.
pub(crate) fn solve_lower(l: &[f64], b: &mut [f64]) {
    let n = b.len();
    for i in 0..n {
        let ri = row_offset(i);
        let s = b[i] - dot(&l[ri..ri + i], &b[..i]);
        b[i] = s / l[ri + i];
    }
}

/// Solves `L^T x = b` in place.
pub(crate) fn solve_lower_transpose(l: &[f64], b: &mut [f64]) {
    let n = b.len();
    for i in (0..n).rev() {
        let ri = row_offset(i);
        b[i] /= l[ri + i];
        let bi = b[i];
        for (k, bk) in b[..i].iter_mut().enumerate() {
            *bk -= l[ri + k] * bi;
        }
    }
}

/// Inverse of `L L^T` as a dense row-major matrix.
pub(crate) fn cholesky_inverse(l: &[f64], n: usize) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|c| *c = 0.0);
        col[j] = 1.0;
        solve_lower(l, &mut col);
        solve_lower_transpose(l, &mut col);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    inv
}

/// Symmetric positive-definite solve with a relative ridge; `None` if the
/// factorization still fails.
pub(crate) fn spd_solve(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let l = cholesky_packed(a, n, 0.0)?;
    let mut x = b.to_vec();
    solve_lower(&l, &mut x);
    solve_lower_transpose(&l, &mut x);
    Some(x)
}
