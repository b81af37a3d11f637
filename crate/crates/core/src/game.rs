//! Best responses, the v-map and Nash certification.
//!
//! `v_i(x) = B_i (1 + max_{j in N_i} x_j)` over the underlying topology. For
//! any feasible profile `v(c(w)) >= c(w)` entrywise, agent `i` best-responds
//! exactly when `v_i(c(w)) = c_i(w)`, and `w` is a Nash equilibrium exactly
//! when `c(w)` is the fixed point of `v`. The map is a sup-norm contraction
//! with rate `B_M`, so that fixed point `c*` is unique and every equilibrium
//! shares it.

use serde::{Deserialize, Serialize};

use crate::centrality::{katz_solve, walk_decomposition, CentralityVector};
use crate::instance::{ensure_feasible, AllocationProfile, GameInstance};
use crate::linalg::max_abs_diff;
use crate::{Error, Result};

/// Relative tolerance under which two best-response scores count as tied.
pub const TIE_TOL: f64 = 1e-10;

/// Evaluates `v(x)`. Entries of `x` must be nonnegative.
pub fn v_map(g: &GameInstance, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: x.len(),
        });
    }
    if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeEntry { index, value });
    }
    Ok(v_unchecked(g, x))
}

fn v_unchecked(g: &GameInstance, x: &[f64]) -> Vec<f64> {
    (0..g.n())
        .map(|i| {
            let best = g
                .topology()
                .neighbors(i)
                .iter()
                .map(|&j| x[j])
                .fold(f64::NEG_INFINITY, f64::max);
            g.budget(i) * (1.0 + best)
        })
        .collect()
}

/// Per-agent gaps `v_i(c) - c_i`; nonnegative up to rounding whenever `c`
/// comes from a feasible profile.
pub fn v_gaps(g: &GameInstance, c: &[f64]) -> Vec<f64> {
    v_unchecked(g, c)
        .iter()
        .zip(c)
        .map(|(v, c)| v - c)
        .collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// The unique fixed point of `v`, with the data needed to trust it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCertificate {
    pub c_star: Vec<f64>,
    pub iterations: usize,
    /// `‖v(c*) - c*‖∞`.
    pub residual: f64,
    /// `B_M`.
    pub contraction_rate: f64,
}

/// Upper bound on the iterations [`equilibrium_centralities`] performs.
pub fn iteration_bound(g: &GameInstance, tol: f64) -> usize {
    let bm = g.max_budget();
    let ratio = tol * (1.0 - bm) / bm;
    if ratio >= 1.0 {
        return 1;
    }
    ((ratio.ln() / bm.ln()).ceil().max(0.0) as usize) + 1
}

/// Iterates `x <- v(x)` from zero until successive iterates are within
/// `tol (1 - B_M) / B_M`, which puts the last iterate within `tol` of `c*`.
///
/// The iterates increase monotonically; in floating point they still reach
/// a fixed bit pattern, so the loop always ends.
pub fn equilibrium_centralities(g: &GameInstance, tol: f64) -> EquilibriumCertificate {
    let bm = g.max_budget();
    let step_tol = tol * (1.0 - bm) / bm;
    let mut x = vec![0.0; g.n()];
    let mut iterations = 0;
    loop {
        let next = v_unchecked(g, &x);
        iterations += 1;
        let delta = max_abs_diff(&next, &x);
        x = next;
        if delta <= step_tol {
            break;
        }
    }
    let residual = sup(&v_gaps(g, &x));
    EquilibriumCertificate {
        c_star: x,
        iterations,
        residual,
        contraction_rate: bm,
    }
}

/// An exact best response of one agent to the others' rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestResponseResult {
    pub agent: usize,
    /// Neighbours whose single-edge allocation is optimal, ascending.
    pub argmax_set: Vec<usize>,
    /// Smallest member of `argmax_set`.
    pub target: usize,
    /// The row `B_i e_target`.
    pub canonical: Vec<f64>,
    /// Agent's centrality after playing `canonical`.
    pub achieved_value: f64,
}

fn argmax_with_ties(scores: &[(usize, f64)]) -> Vec<usize> {
    let best = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let slack = TIE_TOL * best.abs();
    scores
        .iter()
        .filter(|s| best - s.1 <= slack)
        .map(|s| s.0)
        .collect()
}

fn single_edge_row(g: &GameInstance, i: usize, j: usize) -> Vec<f64> {
    let mut row = vec![0.0; g.n()];
    row[j] = g.budget(i);
    row
}

/// Best response from the walk decomposition: spend the budget on a
/// neighbour maximising `f_ji = d_ji / (1 - q_ji B_i)`. Row `i` of `w` is
/// ignored.
pub fn best_response(
    g: &GameInstance,
    i: usize,
    w: &AllocationProfile,
) -> Result<BestResponseResult> {
    let wd = walk_decomposition(g, w, i)?;
    let scores: Vec<(usize, f64)> = g
        .topology()
        .neighbors(i)
        .iter()
        .map(|&j| (j, wd.f[j]))
        .collect();
    let argmax_set = argmax_with_ties(&scores);
    let target = argmax_set[0];
    Ok(BestResponseResult {
        agent: i,
        target,
        canonical: single_edge_row(g, i, target),
        achieved_value: g.budget(i) * wd.f[target],
        argmax_set,
    })
}

/// Best response by brute force: solve the full centrality system once per
/// neighbour `j` with row `i` set to `B_i e_j` and keep the maximisers.
/// Independent of [`best_response`]'s walk decomposition.
pub fn best_response_oracle(
    g: &GameInstance,
    i: usize,
    w: &AllocationProfile,
) -> Result<BestResponseResult> {
    g.check_agent(i)?;
    ensure_feasible(g, w)?;
    let scores = g
        .topology()
        .neighbors(i)
        .iter()
        .map(|&j| {
            let trial = w.with_row(i, &single_edge_row(g, i, j));
            Ok((j, katz_solve(&trial)?[i]))
        })
        .collect::<Result<Vec<_>>>()?;
    let argmax_set = argmax_with_ties(&scores);
    let target = argmax_set[0];
    let achieved_value = scores.iter().find(|s| s.0 == target).unwrap().1;
    Ok(BestResponseResult {
        agent: i,
        target,
        canonical: single_edge_row(g, i, target),
        achieved_value,
        argmax_set,
    })
}

fn centralities_of(g: &GameInstance, w: &AllocationProfile) -> Result<CentralityVector> {
    ensure_feasible(g, w)?;
    katz_solve(w)
}

/// Agent `i` has an allocation strictly better than its current row, i.e.
/// `v_i(c(w)) > c_i(w) + tol`.
pub fn strict_better_response_exists(
    g: &GameInstance,
    i: usize,
    w: &AllocationProfile,
    tol: f64,
) -> Result<bool> {
    g.check_agent(i)?;
    let c = centralities_of(g, w)?;
    Ok(v_gaps(g, c.values())[i] > tol)
}

/// Agent `i`'s current row is a best response: `|c_i(w) - v_i(c(w))| <= tol`.
pub fn is_best_response(
    g: &GameInstance,
    i: usize,
    w: &AllocationProfile,
    tol: f64,
) -> Result<bool> {
    g.check_agent(i)?;
    let c = centralities_of(g, w)?;
    Ok(v_gaps(g, c.values())[i].abs() <= tol)
}

/// Nash certification result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashVerdict {
    pub is_nash: bool,
    /// `‖v(c(w)) - c(w)‖∞`.
    pub residual: f64,
    /// `v_i(c(w)) - c_i(w)` per agent.
    pub v_gap: Vec<f64>,
    pub centralities: Vec<f64>,
    /// `‖c(w) - c*‖∞` against a fresh certificate.
    pub distance_to_c_star: f64,
}

/// `w` is a Nash equilibrium iff `‖v(c(w)) - c(w)‖∞ <= tol`.
pub fn is_nash(g: &GameInstance, w: &AllocationProfile, tol: f64) -> Result<NashVerdict> {
    let c = centralities_of(g, w)?.into_inner();
    let v_gap = v_gaps(g, &c);
    let residual = sup(&v_gap);
    let cert = equilibrium_centralities(g, tol.min(crate::DEFAULT_TOL));
    Ok(NashVerdict {
        is_nash: residual <= tol,
        residual,
        distance_to_c_star: max_abs_diff(&c, &cert.c_star),
        v_gap,
        centralities: c,
    })
}

/// Replaces agent `i`'s row in an equilibrium by another row giving `i` the
/// same centrality and reports whether the result is still an equilibrium
/// (it always should be).
pub fn unilateral_swap_check(
    g: &GameInstance,
    w_star: &AllocationProfile,
    i: usize,
    x_i: &[f64],
    tol: f64,
) -> Result<bool> {
    g.check_agent(i)?;
    if x_i.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: x_i.len(),
        });
    }
    let before = is_nash(g, w_star, tol)?;
    if !before.is_nash {
        return Err(Error::Precondition(format!(
            "profile is not an equilibrium (residual {})",
            before.residual
        )));
    }
    let swapped = w_star.with_row(i, x_i);
    ensure_feasible(g, &swapped)?;
    let after = is_nash(g, &swapped, tol)?;
    let (old, new) = (before.centralities[i], after.centralities[i]);
    if (old - new).abs() > tol {
        return Err(Error::Precondition(format!(
            "replacement row changes agent {}'s centrality from {old} to {new}",
            i + 1
        )));
    }
    Ok(after.is_nash)
}

/// A single-edge equilibrium built from `c*`: every agent spends its whole
/// budget on its lowest-index neighbour of maximal `c*`. Its centralities
/// solve the same linear system as `c*`, so it is an equilibrium up to the
/// certificate's accuracy.
pub fn equilibrium_profile(g: &GameInstance, cert: &EquilibriumCertificate) -> AllocationProfile {
    let targets: Vec<(usize, usize)> = (0..g.n())
        .map(|i| {
            let nbrs = g.topology().neighbors(i);
            let scores: Vec<(usize, f64)> = nbrs.iter().map(|&j| (j, cert.c_star[j])).collect();
            (i, argmax_with_ties(&scores)[0])
        })
        .collect();
    AllocationProfile::single_edges(g, &targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{complete, i1, i2, i3};

    fn profile(rows: Vec<Vec<f64>>) -> AllocationProfile {
        AllocationProfile::from_rows(rows).unwrap()
    }

    #[test]
    fn v_map_examples() {
        let g = i3();
        assert_eq!(v_map(&g, &[0.0, 0.0]).unwrap(), vec![0.5, 0.25]);
        assert_eq!(v_map(&g, &[1.0, 0.5]).unwrap(), vec![1.0, 0.5]);
        assert_eq!(v_map(&i2(), &[0.0, 4.0]).unwrap(), vec![2.5, 0.25]);
        assert!(matches!(
            v_map(&g, &[-1.0, 0.0]),
            Err(Error::NegativeEntry { index: 0, .. })
        ));
        assert!(v_map(&g, &[0.0]).is_err());
    }

    #[test]
    fn fixed_points() {
        let c = equilibrium_centralities(&i1(), 1e-12);
        assert!((c.c_star[0] - 1.0).abs() <= 1e-12);
        let c = equilibrium_centralities(&i3(), 1e-12);
        assert!(max_abs_diff(&c.c_star, &[1.0, 0.5]) <= 1e-12);
        assert_eq!(c.contraction_rate, 0.5);
        assert!(c.residual <= 1e-12);
        assert!(c.iterations <= iteration_bound(&i3(), 1e-12));
    }

    #[test]
    fn best_response_single_neighbour() {
        let g = i2();
        let w = profile(vec![vec![0.0, 0.0], vec![0.25, 0.0]]);
        for br in [
            best_response(&g, 0, &w).unwrap(),
            best_response_oracle(&g, 0, &w).unwrap(),
        ] {
            assert_eq!(br.argmax_set, vec![1]);
            assert_eq!(br.canonical, vec![0.0, 0.5]);
        }
    }

    #[test]
    fn best_response_prefers_high_f() {
        let g = i3();
        let w = profile(vec![vec![0.5, 0.0], vec![0.0, 0.0]]);
        let br = best_response(&g, 1, &w).unwrap();
        assert_eq!(br.argmax_set, vec![0]);
        assert_eq!(br.canonical, vec![0.25, 0.0]);
        assert!((br.achieved_value - 0.5).abs() < 1e-15);
        let oracle = best_response_oracle(&g, 1, &w).unwrap();
        assert_eq!(oracle.argmax_set, br.argmax_set);
        assert!((oracle.achieved_value - br.achieved_value).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_is_a_tie() {
        // f_11 = 1 / (1 - 0.5) = 2 and f_21 = (1 + 0 + 1) / 1 = 2
        let g = complete(&[0.5, 0.5]);
        let w = profile(vec![vec![0.0, 0.0], vec![0.0, 0.5]]);
        let br = best_response(&g, 0, &w).unwrap();
        let oracle = best_response_oracle(&g, 0, &w).unwrap();
        assert_eq!(br.argmax_set, vec![0, 1]);
        assert_eq!(oracle.argmax_set, vec![0, 1]);
        assert_eq!(br.target, 0);
        assert!((br.achieved_value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn better_response_examples() {
        let g = i3();
        for i in 0..2 {
            assert!(
                strict_better_response_exists(&g, i, &AllocationProfile::zero(2), 1e-10).unwrap()
            );
            assert!(!is_best_response(&g, i, &AllocationProfile::zero(2), 1e-10).unwrap());
        }
        let ne = profile(vec![vec![0.5, 0.0], vec![0.25, 0.0]]);
        for i in 0..2 {
            assert!(!strict_better_response_exists(&g, i, &ne, 1e-10).unwrap());
            assert!(is_best_response(&g, i, &ne, 1e-10).unwrap());
        }
        let g2 = i2();
        let w = profile(vec![vec![0.0, 0.5], vec![0.0, 0.0]]);
        assert!(strict_better_response_exists(&g2, 1, &w, 1e-10).unwrap());
        assert!(!strict_better_response_exists(&g2, 0, &w, 1e-10).unwrap());
        let both = profile(vec![vec![0.0, 0.5], vec![0.25, 0.0]]);
        assert!(is_best_response(&g2, 0, &both, 1e-10).unwrap());
        assert!(is_best_response(&g2, 1, &both, 1e-10).unwrap());
    }

    #[test]
    fn nash_examples() {
        let g2 = i2();
        let v = is_nash(&g2, &profile(vec![vec![0.0, 0.5], vec![0.25, 0.0]]), 1e-10).unwrap();
        assert!(v.is_nash);
        let v = is_nash(&g2, &AllocationProfile::zero(2), 1e-10).unwrap();
        assert!(!v.is_nash);
        assert_eq!(v.residual, 0.5);

        let g3 = i3();
        let v = is_nash(&g3, &profile(vec![vec![0.5, 0.0], vec![0.25, 0.0]]), 1e-10).unwrap();
        assert!(v.is_nash);
        assert!(max_abs_diff(&v.centralities, &[1.0, 0.5]) < 1e-14);
        assert!(v.distance_to_c_star < 1e-10);

        let bad = profile(vec![vec![0.0, 0.5], vec![0.0, 0.0]]);
        assert!(matches!(
            is_nash(&g3, &bad.with_row(0, &[0.6, 0.0]), 1e-10),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn swaps_among_tied_responses() {
        let g = complete(&[0.4, 0.4, 0.4]);
        let cert = equilibrium_centralities(&g, 1e-12);
        let w = equilibrium_profile(&g, &cert);
        assert!(is_nash(&g, &w, 1e-10).unwrap().is_nash);
        // identity swap
        assert!(unilateral_swap_check(&g, &w, 1, w.row(1), 1e-10).unwrap());
        // agent 2 moves its budget to agent 3, then splits it
        assert!(unilateral_swap_check(&g, &w, 1, &[0.0, 0.0, 0.4], 1e-10).unwrap());
        assert!(unilateral_swap_check(&g, &w, 1, &[0.2, 0.0, 0.2], 1e-10).unwrap());
        // a row that loses centrality is a precondition failure
        assert!(matches!(
            unilateral_swap_check(&g, &w, 1, &[0.1, 0.0, 0.0], 1e-10),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            unilateral_swap_check(&g, &AllocationProfile::zero(3), 1, &[0.4, 0.0, 0.0], 1e-10),
            Err(Error::Precondition(_))
        ));
    }
}
