use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AllocationProfile, GameInstance, InstanceDraft};
use crate::{Error, Result};

/// Parameters for [`generate_random_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct RandomInstanceParams {
    pub n: usize,
    /// Probability that each non-self pair is present.
    pub edge_density: f64,
    /// Add `(i, i)` for every agent.
    pub self_loops: bool,
    /// Draw unordered pairs and insert both directions (undirected topology).
    pub symmetric: bool,
    /// Closed interval inside (0, 1) that budgets are drawn from.
    pub budget_range: (f64, f64),
    /// When set, budgets are drawn uniformly from the grid points
    /// `k * step` inside `budget_range`, so equal budgets occur.
    pub budget_step: Option<f64>,
    pub seed: u64,
}

impl RandomInstanceParams {
    pub fn new(n: usize, edge_density: f64, seed: u64) -> Self {
        Self {
            n,
            edge_density,
            self_loops: false,
            symmetric: false,
            budget_range: (0.1, 0.9),
            budget_step: None,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.budget_range;
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.edge_density) {
            return Err(Error::Config(format!(
                "edge density {} outside [0, 1]",
                self.edge_density
            )));
        }
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err(Error::Config(format!(
                "budget range [{lo}, {hi}] must lie inside (0, 1)"
            )));
        }
        if let Some(step) = self.budget_step {
            if !(step > 0.0) || grid(lo, hi, step).is_empty() {
                return Err(Error::Config(format!(
                    "budget step {step} has no grid point in [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let first = (lo / step - 1e-9).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first.max(1)..=last)
        .map(|k| {
            // shortest decimal for k * step, e.g. 0.3 rather than 0.30000000000000004
            let v: f64 = format!("{:.12}", k as f64 * step).parse().unwrap();
            v
        })
        .filter(|&v| v > 0.0 && v < 1.0)
        .collect()
}

/// Deterministic random instance. Agents with no out-neighbour after sampling
/// receive one uniformly chosen out-edge (plus its reverse when symmetric).
pub fn generate_random_instance(p: &RandomInstanceParams) -> Result<GameInstance> {
    p.validate()?;
    let n = p.n;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut adj = vec![vec![false; n]; n];

    for i in 0..n {
        let start = if p.symmetric { i + 1 } else { 0 };
        for j in start..n {
            if i == j {
                continue;
            }
            if rng.gen::<f64>() < p.edge_density {
                adj[i][j] = true;
                if p.symmetric {
                    adj[j][i] = true;
                }
            }
        }
    }
    if p.self_loops {
        for (i, row) in adj.iter_mut().enumerate() {
            row[i] = true;
        }
    }
    for i in 0..n {
        if !adj[i].iter().any(|&b| b) {
            let candidates: Vec<usize> = if n == 1 {
                vec![0]
            } else {
                (0..n).filter(|&j| j != i).collect()
            };
            let j = *candidates.choose(&mut rng).expect("non-empty");
            adj[i][j] = true;
            if p.symmetric {
                adj[j][i] = true;
            }
        }
    }

    let (lo, hi) = p.budget_range;
    let budgets = match p.budget_step {
        Some(step) => {
            let points = grid(lo, hi, step);
            (0..n).map(|_| *points.choose(&mut rng).unwrap()).collect()
        }
        None => (0..n).map(|_| rng.gen_range(lo..=hi)).collect(),
    };

    let edges = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| adj[i][j])
        .collect();
    InstanceDraft {
        n,
        edges,
        budgets,
        name: None,
    }
    .build()
}

/// Random feasible profile: each row gets a random nonempty support inside
/// the agent's neighbourhood and a random total in `(0, B_i]`; roughly one
/// row in eight is left at zero and one in four spends the full budget.
pub fn random_profile<R: Rng + ?Sized>(g: &GameInstance, rng: &mut R) -> AllocationProfile {
    let n = g.n();
    let mut w = AllocationProfile::zero(n);
    for i in 0..n {
        if rng.gen_bool(0.125) {
            continue;
        }
        let nbrs = g.topology().neighbors(i);
        let mut support: Vec<usize> = nbrs.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if support.is_empty() {
            support.push(*nbrs.choose(rng).expect("nonempty neighbourhood"));
        }
        let raw: Vec<f64> = support.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let spend = if rng.gen_bool(0.25) {
            g.budget(i)
        } else {
            g.budget(i) * rng.gen_range(0.05..1.0)
        };
        for (&j, r) in support.iter().zip(&raw) {
            w.set(i, j, spend * r / total);
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{io::serialize_instance, is_feasible};

    #[test]
    fn density_one_is_complete_without_self_loops() {
        let g = generate_random_instance(&RandomInstanceParams {
            budget_range: (0.1, 0.9),
            ..RandomInstanceParams::new(5, 1.0, 7)
        })
        .unwrap();
        assert_eq!(g.topology().edge_count(), 20);
        for i in 0..5 {
            assert!(!g.topology().has_edge(i, i));
            assert_eq!(g.topology().neighbors(i).len(), 4);
        }
        assert!(g.budgets().iter().all(|&b| (0.1..=0.9).contains(&b)));
    }

    #[test]
    fn density_zero_with_self_loops_is_only_loops() {
        let g = generate_random_instance(&RandomInstanceParams {
            self_loops: true,
            ..RandomInstanceParams::new(3, 0.0, 1)
        })
        .unwrap();
        let edges: Vec<_> = g.topology().edges().collect();
        assert_eq!(edges, vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn empty_rows_repaired_and_symmetry() {
        for seed in 0..20 {
            let g = generate_random_instance(&RandomInstanceParams {
                symmetric: true,
                ..RandomInstanceParams::new(6, 0.1, seed)
            })
            .unwrap();
            assert!(g.topology().is_symmetric());
            assert!((0..6).all(|i| !g.topology().neighbors(i).is_empty()));
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let p = RandomInstanceParams {
            self_loops: true,
            ..RandomInstanceParams::new(10, 0.3, 5)
        };
        let a = generate_random_instance(&p).unwrap();
        let b = generate_random_instance(&p).unwrap();
        assert_eq!(a, b);
        assert_eq!(serialize_instance(&a), serialize_instance(&b));
        let c = generate_random_instance(&RandomInstanceParams { seed: 6, ..p }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn budget_grid() {
        let g = generate_random_instance(&RandomInstanceParams {
            budget_range: (0.1, 0.5),
            budget_step: Some(0.1),
            ..RandomInstanceParams::new(40, 0.2, 3)
        })
        .unwrap();
        for &b in g.budgets() {
            assert!([0.1, 0.2, 0.3, 0.4, 0.5].contains(&b), "{b}");
        }
    }

    #[test]
    fn invalid_params() {
        assert!(generate_random_instance(&RandomInstanceParams {
            budget_range: (0.5, 1.0),
            ..RandomInstanceParams::new(3, 0.5, 0)
        })
        .is_err());
        assert!(generate_random_instance(&RandomInstanceParams::new(3, 1.5, 0)).is_err());
    }

    #[test]
    fn random_profiles_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..50 {
            let g = generate_random_instance(&RandomInstanceParams::new(8, 0.4, seed)).unwrap();
            let w = random_profile(&g, &mut rng);
            assert!(is_feasible(&g, &w).unwrap());
        }
    }
}
