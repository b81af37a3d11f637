//! Dense LU factorisation with partial pivoting.
//!
//! Every system solved in this crate has the form `(I - A) x = b` with `A`
//! nonnegative and row sums below one, so the matrix is strictly row
//! diagonally dominant and pivoting never meets a zero.

use crate::{Error, Result};

/// Row-major LU factors `P M = L U` of a square matrix.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    /// Factors the row-major `n x n` matrix `m`.
    pub fn factor(n: usize, mut m: Vec<f64>) -> Result<Self> {
        if m.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: m.len(),
            });
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut pivot = k;
            let mut best = m[k * n + k].abs();
            for r in (k + 1)..n {
                let v = m[r * n + k].abs();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(k));
            }
            if pivot != k {
                for c in 0..n {
                    m.swap(k * n + c, pivot * n + c);
                }
                perm.swap(k, pivot);
            }
            let diag = m[k * n + k];
            for r in (k + 1)..n {
                let factor = m[r * n + k] / diag;
                if factor == 0.0 {
                    continue;
                }
                m[r * n + k] = factor;
                for c in (k + 1)..n {
                    m[r * n + c] -= factor * m[k * n + c];
                }
            }
        }
        Ok(Self { n, lu: m, perm })
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n, "right-hand side length");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut s = x[r];
            for c in 0..r {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in (r + 1)..n {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s / self.lu[r * n + r];
        }
        x
    }
}

/// Returns `I - a` for a row-major square matrix `a`.
pub fn identity_minus(n: usize, a: &[f64]) -> Vec<f64> {
    let mut m: Vec<f64> = a.iter().map(|v| -v).collect();
    for i in 0..n {
        m[i * n + i] += 1.0;
    }
    m
}

/// Row-major matrix-vector product.
pub fn mat_vec(n: usize, a: &[f64], x: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|r| {
            a[r * n..(r + 1) * n]
                .iter()
                .zip(x)
                .map(|(u, v)| u * v)
                .sum()
        })
        .collect()
}

/// Infinity norm of `a - b`.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
