//! Katz centralities with discount 1 and the per-agent walk decomposition.
//!
//! For a profile `w` with row sums below one, `c(w) = (I - A)^{-1} A 1`,
//! equivalently `c_i = sum_j w_ij (1 + c_j)`.
//!
//! Fixing an agent `i`, every other agent's centrality splits into walks that
//! never reach `i` (`p_ji`) and walks that reach `i` exactly once and stop
//! there (`q_ji`), so that `c_j = p_ji + q_ji (1 + c_i)`. Both parts depend
//! only on the other agents' rows, which turns agent `i`'s centrality into
//! the fractional-linear function
//!
//! ```text
//! c_i(w_i) = (sum_j d_ji w_ij) / (1 - sum_j q_ji w_ij),   d_ji = p_ji + q_ji + 1
//! ```

use serde::{Deserialize, Serialize};

use crate::instance::{ensure_feasible, AllocationProfile, GameInstance};
use crate::linalg::{identity_minus, mat_vec, LuFactors};
use crate::{Error, Result};

/// Per-entry centralities `c_i >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CentralityVector(pub Vec<f64>);

impl CentralityVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for CentralityVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Solves `(I - A(w)) c = A(w) 1` by dense LU.
///
/// Errors without solving when an entry is negative or a row sum is at
/// least one.
pub fn katz_solve(w: &AllocationProfile) -> Result<CentralityVector> {
    w.check_substochastic()?;
    let n = w.n();
    let a = w.as_matrix();
    let rhs: Vec<f64> = (0..n).map(|i| w.row_sum(i)).collect();
    let lu = LuFactors::factor(n, identity_minus(n, a))?;
    Ok(CentralityVector(lu.solve(&rhs)))
}

/// `‖(I - A) c - A 1‖∞`, the residual of a centrality vector.
pub fn solve_residual(w: &AllocationProfile, c: &[f64]) -> f64 {
    let n = w.n();
    let ac = mat_vec(n, w.as_matrix(), c);
    (0..n)
        .map(|i| (c[i] - ac[i] - w.row_sum(i)).abs())
        .fold(0.0, f64::max)
}

/// Truncated walk series `sum_{k=1..depth} A^k 1`.
pub fn katz_series(w: &AllocationProfile, depth: usize) -> Result<CentralityVector> {
    if depth == 0 {
        return Err(Error::Config("series depth must be at least 1".into()));
    }
    w.check_substochastic()?;
    let n = w.n();
    let a = w.as_matrix();
    let mut term = vec![1.0; n];
    let mut sum = vec![0.0; n];
    for _ in 0..depth {
        term = mat_vec(n, a, &term);
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
    }
    Ok(CentralityVector(sum))
}

/// Bound on `‖katz_solve(w) - katz_series(w, depth)‖∞` when every row sum is
/// at most `b_max`.
pub fn series_tail_bound(b_max: f64, depth: usize) -> f64 {
    b_max.powi(depth as i32 + 1) / (1.0 - b_max)
}

/// Walk quantities for a focal agent, all independent of the focal row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkDecomposition {
    pub agent: usize,
    /// `p_ji`: walk mass from `j` that never reaches the focal agent. The
    /// focal entry has no meaning and is stored as 0.
    pub p: Vec<f64>,
    /// `q_ji`: walk mass from `j` reaching the focal agent exactly once and
    /// stopping there; `q_ii = 1`.
    pub q: Vec<f64>,
    /// `d_ji = p_ji + q_ji + 1`; `d_ii = 1`.
    pub d: Vec<f64>,
    /// Single-edge scores `f_ji = d_ji / (1 - q_ji B_i)`. Spending the whole
    /// budget on `j` yields `c_i = B_i f_ji`.
    pub f: Vec<f64>,
}

/// Computes `p, q, d, f` for agent `i` by two solves on the graph with row
/// and column `i` deleted.
pub fn walk_decomposition(
    g: &GameInstance,
    w: &AllocationProfile,
    i: usize,
) -> Result<WalkDecomposition> {
    g.check_agent(i)?;
    ensure_feasible(g, w)?;
    w.check_substochastic()?;
    let n = g.n();
    let mut deleted = w.as_matrix().to_vec();
    for k in 0..n {
        deleted[i * n + k] = 0.0;
        deleted[k * n + i] = 0.0;
    }
    let into_i: Vec<f64> = (0..n)
        .map(|k| if k == i { 0.0 } else { w.get(k, i) })
        .collect();
    let out_mass: Vec<f64> = (0..n)
        .map(|k| deleted[k * n..(k + 1) * n].iter().sum())
        .collect();

    let lu = LuFactors::factor(n, identity_minus(n, &deleted))?;
    let mut p = lu.solve(&out_mass);
    let mut q = lu.solve(&into_i);
    p[i] = 0.0;
    q[i] = 1.0;
    let mut d: Vec<f64> = p.iter().zip(&q).map(|(p, q)| p + q + 1.0).collect();
    d[i] = 1.0;

    let b = g.budget(i);
    let f = d
        .iter()
        .zip(&q)
        .map(|(d, q)| {
            let den = 1.0 - q * b;
            if den > 0.0 {
                Ok(d / den)
            } else {
                Err(Error::NonPositiveDenominator {
                    agent: i,
                    value: den,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WalkDecomposition {
        agent: i,
        p,
        q,
        d,
        f,
    })
}

/// Agent `i`'s centrality when it plays `row` against the rows summarised in
/// `wd`.
pub fn fractional_linear_centrality(i: usize, row: &[f64], wd: &WalkDecomposition) -> Result<f64> {
    if wd.agent != i {
        return Err(Error::Precondition(format!(
            "walk decomposition is for agent {}, not {}",
            wd.agent + 1,
            i + 1
        )));
    }
    if row.len() != wd.d.len() {
        return Err(Error::DimensionMismatch {
            expected: wd.d.len(),
            found: row.len(),
        });
    }
    let num: f64 = row.iter().zip(&wd.d).map(|(w, d)| w * d).sum();
    let den = 1.0 - row.iter().zip(&wd.q).map(|(w, q)| w * q).sum::<f64>();
    if den <= 0.0 {
        return Err(Error::NonPositiveDenominator {
            agent: i,
            value: den,
        });
    }
    Ok(num / den)
}

/// `1 - sum_j q_ji w_ij`, positive for every feasible profile.
pub fn fractional_denominator(row: &[f64], wd: &WalkDecomposition) -> f64 {
    1.0 - row.iter().zip(&wd.q).map(|(w, q)| w * q).sum::<f64>()
}
