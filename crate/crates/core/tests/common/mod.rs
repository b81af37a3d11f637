#![allow(dead_code, clippy::needless_range_loop)]

use katzforge::instance::{generate_random_instance, random_profile, RandomInstanceParams};
use katzforge::{AllocationProfile, GameInstance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn instance(
    n: usize,
    density: f64,
    seed: u64,
    self_loops: bool,
    symmetric: bool,
) -> GameInstance {
    generate_random_instance(&RandomInstanceParams {
        self_loops,
        symmetric,
        ..RandomInstanceParams::new(n, density, seed)
    })
    .expect("generator parameters are valid")
}

/// Instance plus a random feasible profile drawn from the same seed.
pub fn instance_and_profile(
    n: usize,
    density: f64,
    seed: u64,
    self_loops: bool,
    symmetric: bool,
) -> (GameInstance, AllocationProfile) {
    let g = instance(n, density, seed, self_loops, symmetric);
    let w = random_profile(&g, &mut rng(seed ^ 0x5eed));
    (g, w)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Walk sums from every start `j != i` by dynamic programming over walk
/// length: `p[j]` sums weights of walks of length `1..=depth` that never
/// visit `i`; `q[j]` sums weights of walks of length `1..=depth` that end at
/// `i` and visit it nowhere else. Entries at `i` are left at zero.
pub fn walk_sums_dp(w: &AllocationProfile, i: usize, depth: usize) -> (Vec<f64>, Vec<f64>) {
    let n = w.n();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for j in (0..n).filter(|&j| j != i) {
        // mass[v]: weight of walks of the current length from j to v avoiding i
        let mut mass = vec![0.0; n];
        mass[j] = 1.0;
        for _ in 0..depth {
            let mut next = vec![0.0; n];
            for u in 0..n {
                if mass[u] == 0.0 {
                    continue;
                }
                q[j] += mass[u] * w.get(u, i);
                for v in (0..n).filter(|&v| v != i) {
                    next[v] += mass[u] * w.get(u, v);
                }
            }
            p[j] += next.iter().sum::<f64>();
            mass = next;
        }
    }
    (p, q)
}

/// Same sums as [`walk_sums_dp`] by listing every walk explicitly; only
/// usable for tiny `n` and `depth`.
pub fn walk_sums_dfs(w: &AllocationProfile, i: usize, depth: usize) -> (Vec<f64>, Vec<f64>) {
    fn go(
        w: &AllocationProfile,
        i: usize,
        at: usize,
        weight: f64,
        left: usize,
        p: &mut f64,
        q: &mut f64,
    ) {
        if left == 0 {
            return;
        }
        for v in 0..w.n() {
            let e = w.get(at, v);
            if e == 0.0 {
                continue;
            }
            if v == i {
                *q += weight * e;
            } else {
                *p += weight * e;
                go(w, i, v, weight * e, left - 1, p, q);
            }
        }
    }
    let n = w.n();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for j in (0..n).filter(|&j| j != i) {
        go(w, i, j, 1.0, depth, &mut p[j], &mut q[j]);
    }
    (p, q)
}

/// Katz centralities with discount `delta` by summing `(delta W)^k 1` for
/// `k = 1..=depth`.
pub fn discounted_katz_series(w: &AllocationProfile, delta: f64, depth: usize) -> Vec<f64> {
    let n = w.n();
    let mut term = vec![1.0; n];
    let mut total = vec![0.0; n];
    for _ in 0..depth {
        let next: Vec<f64> = (0..n)
            .map(|r| (0..n).map(|c| delta * w.get(r, c) * term[c]).sum())
            .collect();
        for (t, x) in total.iter_mut().zip(&next) {
            *t += x;
        }
        term = next;
    }
    total
}
