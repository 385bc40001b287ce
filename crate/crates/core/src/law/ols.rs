//! Dense least squares via the normal equations.
//!
//! Columns are scaled to unit norm before forming `XᵀX`, the Gram matrix is
//! Cholesky-factored, and one step of iterative refinement is applied to the
//! solution.

use alloc::vec;
use alloc::vec::Vec;

/// Smallest admissible Cholesky pivot of the unit-diagonal Gram matrix.
const PIVOT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct RankDeficient {
    /// Column (in the caller's order) at which the factorization broke down.
    pub column: usize,
}

/// Solve `min ‖X b − y‖₂` for row-major `x` with `p` columns.
pub(crate) fn least_squares(x: &[f64], p: usize, y: &[f64]) -> Result<Vec<f64>, RankDeficient> {
    let n = y.len();
    debug_assert_eq!(x.len(), n * p);

    let mut scale = vec![0.0; p];
    for row in x.chunks_exact(p) {
        for (s, v) in scale.iter_mut().zip(row) {
            *s += v * v;
        }
    }
    for (column, s) in scale.iter_mut().enumerate() {
        *s = libm::sqrt(*s);
        if *s == 0.0 {
            return Err(RankDeficient { column });
        }
    }
    let z: Vec<f64> = x
        .chunks_exact(p)
        .flat_map(|row| row.iter().zip(&scale).map(|(v, s)| v / s))
        .collect();

    let mut gram = vec![0.0; p * p];
    for row in z.chunks_exact(p) {
        for i in 0..p {
            for j in 0..=i {
                gram[i * p + j] += row[i] * row[j];
            }
        }
    }
    let chol = cholesky(&mut gram, p)?;

    let mut coef = chol.solve(&z_transpose_times(&z, p, y));
    let residual: Vec<f64> = z
        .chunks_exact(p)
        .zip(y)
        .map(|(row, yi)| yi - dot(row, &coef))
        .collect();
    let correction = chol.solve(&z_transpose_times(&z, p, &residual));
    for (c, d) in coef.iter_mut().zip(correction) {
        *c += d;
    }

    for (c, s) in coef.iter_mut().zip(&scale) {
        *c /= s;
    }
    Ok(coef)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn z_transpose_times(z: &[f64], p: usize, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p];
    for (row, vi) in z.chunks_exact(p).zip(v) {
        for (o, zij) in out.iter_mut().zip(row) {
            *o += zij * vi;
        }
    }
    out
}

struct Cholesky {
    /// Lower triangle, row-major.
    l: Vec<f64>,
    p: usize,
}

/// Factor the lower triangle of `a` in place.
fn cholesky(a: &mut [f64], p: usize) -> Result<Cholesky, RankDeficient> {
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= a[j * p + k] * a[j * p + k];
        }
        if d <= PIVOT_TOLERANCE {
            return Err(RankDeficient { column: j });
        }
        let d = libm::sqrt(d);
        a[j * p + j] = d;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = s / d;
        }
    }
    Ok(Cholesky { l: a.to_vec(), p })
}

impl Cholesky {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (l, p) = (&self.l, self.p);
        let mut y = b.to_vec();
        for i in 0..p {
            for k in 0..i {
                y[i] -= l[i * p + k] * y[k];
            }
            y[i] /= l[i * p + i];
        }
        for i in (0..p).rev() {
            for k in i + 1..p {
                y[i] -= l[k * p + i] * y[k];
            }
            y[i] /= l[i * p + i];
        }
        y
    }
}
