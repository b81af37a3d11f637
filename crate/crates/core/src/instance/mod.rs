//! Game instances, allocation profiles and feasibility.
//!
//! Agents are 0-based everywhere inside the crate. Documents use 1-based
//! indices and the conversion happens only in [`io`].

mod generate;
pub mod io;

use std::fmt;

use serde::Serialize;

use crate::{Error, Result};

pub use generate::{generate_random_instance, random_profile, RandomInstanceParams};

/// Absolute slack applied to the budget constraint when checking feasibility.
pub const BUDGET_SLACK: f64 = 1e-12;

/// Absolute tolerance for classifying a budget as equal to the maximum budget.
pub const BUDGET_TIE_TOL: f64 = 1e-12;

/// Unweighted digraph restricting who may allocate to whom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnderlyingTopology {
    n: usize,
    out: Vec<Vec<usize>>,
}

impl UnderlyingTopology {
    /// Builds a topology from 0-based pairs. Duplicates and out-of-range pairs
    /// are errors; empty neighbourhoods are allowed here and rejected when the
    /// topology is paired with budgets.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let draft = InstanceDraft {
            n,
            edges: edges.to_vec(),
            budgets: Vec::new(),
            name: None,
        };
        let structural: Vec<Violation> = validate_edges(&draft);
        if !structural.is_empty() {
            return Err(Error::InvalidInstance(ValidationReport {
                violations: structural,
            }));
        }
        Ok(Self::from_edges_unchecked(n, edges))
    }

    fn from_edges_unchecked(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut out = vec![Vec::new(); n];
        for &(i, j) in edges {
            out[i].push(j);
        }
        for row in &mut out {
            row.sort_unstable();
        }
        Self { n, out }
    }

    /// Complete digraph including self-pairs.
    pub fn complete(n: usize) -> Self {
        Self {
            n,
            out: vec![(0..n).collect(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Out-neighbours of `i`, sorted ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && self.out[i].binary_search(&j).is_ok()
    }

    /// All pairs in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    /// Every ordered pair, self-pairs included, is present.
    pub fn is_complete(&self) -> bool {
        self.out.iter().all(|row| row.len() == self.n)
    }

    /// Every agent may allocate to itself.
    pub fn has_all_self_loops(&self) -> bool {
        (0..self.n).all(|i| self.has_edge(i, i))
    }

    /// The pair set is symmetric, i.e. the topology is undirected.
    pub fn is_symmetric(&self) -> bool {
        self.edges().all(|(i, j)| self.has_edge(j, i))
    }
}

/// Which standing rule a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// No agents at all.
    EmptyGame,
    /// A pair references an agent outside `1..=n`.
    EdgeOutOfRange,
    /// The same ordered pair is listed twice.
    DuplicateEdge,
    /// Budget vector length differs from `n`.
    BudgetCount,
    /// An agent has no out-neighbour in the topology.
    EmptyNeighborhood,
    /// A budget is not in the open interval (0, 1).
    BudgetRange,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// 0-based agent the violation concerns, when there is one.
    pub agent: Option<usize>,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.agent {
            Some(a) => write!(f, "agent {}: {:?}: {}", a + 1, self.rule, self.detail),
            None => write!(f, "{:?}: {}", self.rule, self.detail),
        }
    }
}

/// Outcome of [`validate_instance`]; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Unvalidated instance data, 0-based. Budgets are unchecked; [`rescale`]
/// accepts drafts with budgets at or above one.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDraft {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub budgets: Vec<f64>,
    pub name: Option<String>,
}

impl InstanceDraft {
    /// Validates and freezes the draft.
    pub fn build(self) -> Result<GameInstance> {
        let report = validate_instance(&self);
        if !report.is_ok() {
            return Err(Error::InvalidInstance(report));
        }
        let topology = UnderlyingTopology::from_edges_unchecked(self.n, &self.edges);
        Ok(GameInstance {
            topology,
            budgets: self.budgets,
            name: self.name,
        })
    }
}

fn validate_edges(d: &InstanceDraft) -> Vec<Violation> {
    let mut out = Vec::new();
    if d.n == 0 {
        out.push(Violation {
            agent: None,
            rule: Rule::EmptyGame,
            detail: "n must be positive".into(),
        });
    }
    let mut seen = std::collections::HashSet::new();
    for &(i, j) in &d.edges {
        if i >= d.n || j >= d.n {
            out.push(Violation {
                agent: None,
                rule: Rule::EdgeOutOfRange,
                detail: format!("pair ({}, {}) outside 1..={}", i + 1, j + 1, d.n),
            });
        } else if !seen.insert((i, j)) {
            out.push(Violation {
                agent: Some(i),
                rule: Rule::DuplicateEdge,
                detail: format!("pair ({}, {}) listed more than once", i + 1, j + 1),
            });
        }
    }
    out
}

/// Checks index ranges, duplicates, nonempty neighbourhoods and the budget
/// range, naming the agent and rule for every violation.
pub fn validate_instance(d: &InstanceDraft) -> ValidationReport {
    let mut violations = validate_edges(d);
    let mut has_out = vec![false; d.n];
    for &(i, j) in &d.edges {
        if i < d.n && j < d.n {
            has_out[i] = true;
        }
    }
    for (i, ok) in has_out.iter().enumerate() {
        if !ok {
            violations.push(Violation {
                agent: Some(i),
                rule: Rule::EmptyNeighborhood,
                detail: format!("N_{} is empty", i + 1),
            });
        }
    }
    if d.budgets.len() != d.n {
        violations.push(Violation {
            agent: None,
            rule: Rule::BudgetCount,
            detail: format!("{} budgets for {} agents", d.budgets.len(), d.n),
        });
    }
    for (i, &b) in d.budgets.iter().enumerate() {
        if !(b > 0.0 && b < 1.0) {
            violations.push(Violation {
                agent: Some(i),
                rule: Rule::BudgetRange,
                detail: format!("B_{} = {} not in (0, 1)", i + 1, b),
            });
        }
    }
    ValidationReport { violations }
}

/// A validated game: topology plus budgets, immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct GameInstance {
    topology: UnderlyingTopology,
    budgets: Vec<f64>,
    name: Option<String>,
}

impl GameInstance {
    pub fn new(topology: UnderlyingTopology, budgets: Vec<f64>) -> Result<Self> {
        InstanceDraft {
            n: topology.n,
            edges: topology.edges().collect(),
            budgets,
            name: None,
        }
        .build()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn n(&self) -> usize {
        self.topology.n
    }

    pub fn topology(&self) -> &UnderlyingTopology {
        &self.topology
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn budget(&self, i: usize) -> f64 {
        self.budgets[i]
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// `B_M`, the largest budget; also the contraction rate of the v-map.
    pub fn max_budget(&self) -> f64 {
        self.budgets.iter().copied().fold(0.0, f64::max)
    }

    /// Agents whose budget equals `B_M` within [`BUDGET_TIE_TOL`].
    pub fn max_budget_agents(&self) -> Vec<usize> {
        let bm = self.max_budget();
        (0..self.n())
            .filter(|&i| (self.budgets[i] - bm).abs() <= BUDGET_TIE_TOL)
            .collect()
    }

    /// Back to an editable draft.
    pub fn to_draft(&self) -> InstanceDraft {
        InstanceDraft {
            n: self.n(),
            edges: self.topology.edges().collect(),
            budgets: self.budgets.clone(),
            name: self.name.clone(),
        }
    }

    pub(crate) fn check_agent(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(Error::AgentOutOfRange(i))
        }
    }
}

/// Strategy profile: dense `n x n` nonnegative weights, row `i` is agent
/// `i`'s allocation. The zero profile is valid and feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProfile {
    n: usize,
    weights: Vec<f64>,
}

impl AllocationProfile {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            weights: vec![0.0; n * n],
        }
    }

    /// Builds from dense rows; the matrix must be square.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut weights = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            weights.extend(row);
        }
        Ok(Self { n, weights })
    }

    /// Profile in which every listed agent spends its whole budget on one
    /// target; unlisted rows are zero.
    pub fn single_edges(g: &GameInstance, targets: &[(usize, usize)]) -> Self {
        let mut w = Self::zero(g.n());
        for &(i, j) in targets {
            w.weights[i * g.n() + j] = g.budget(i);
        }
        w
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.weights[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn set_row(&mut self, i: usize, row: &[f64]) {
        assert_eq!(row.len(), self.n, "row length");
        self.weights[i * self.n..(i + 1) * self.n].copy_from_slice(row);
    }

    /// Copy with row `i` replaced, i.e. `(row, w_{-i})`.
    pub fn with_row(&self, i: usize, row: &[f64]) -> Self {
        let mut w = self.clone();
        w.set_row(i, row);
        w
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    /// Row-major view of the induced adjacency matrix `A(w)`.
    pub fn as_matrix(&self) -> &[f64] {
        &self.weights
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.weights
            .chunks(self.n.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Out-neighbours of `i` in the played network `G(w)`.
    pub fn support(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.get(i, j) > 0.0).collect()
    }

    /// Positive-weight pairs in row-major order.
    pub fn positive_edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| (0..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.get(i, j) > 0.0)
            .collect()
    }

    /// Checks nonnegativity and row sums below one, the conditions under
    /// which the Katz series converges with discount 1.
    pub(crate) fn check_substochastic(&self) -> Result<()> {
        for (k, &v) in self.weights.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NegativeEntry { index: k, value: v });
            }
        }
        for i in 0..self.n {
            let s = self.row_sum(i);
            if s >= 1.0 {
                return Err(Error::Infeasible(format!(
                    "row {} sums to {s}, not below 1",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// First constraint of `K(G†)` that `w` breaks, if any.
pub fn feasibility_violation(g: &GameInstance, w: &AllocationProfile) -> Result<Option<String>> {
    if w.n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: w.n(),
        });
    }
    for i in 0..g.n() {
        let mut sum = 0.0;
        for j in 0..g.n() {
            let v = w.get(i, j);
            if !v.is_finite() || v < 0.0 {
                return Ok(Some(format!("w[{},{}] = {v} is negative", i + 1, j + 1)));
            }
            if v > 0.0 && !g.topology().has_edge(i, j) {
                return Ok(Some(format!(
                    "w[{},{}] = {v} but ({}, {}) is not in the topology",
                    i + 1,
                    j + 1,
                    i + 1,
                    j + 1
                )));
            }
            sum += v;
        }
        if sum > g.budget(i) + BUDGET_SLACK {
            return Ok(Some(format!(
                "row {} sums to {sum}, above budget {}",
                i + 1,
                g.budget(i)
            )));
        }
    }
    Ok(None)
}

/// `w ∈ K(G†)`: support within the topology and every row within budget.
pub fn is_feasible(g: &GameInstance, w: &AllocationProfile) -> Result<bool> {
    Ok(feasibility_violation(g, w)?.is_none())
}

/// Errors with [`Error::Infeasible`] unless `w` is feasible for `g`.
pub fn ensure_feasible(g: &GameInstance, w: &AllocationProfile) -> Result<()> {
    match feasibility_violation(g, w)? {
        None => Ok(()),
        Some(why) => Err(Error::Infeasible(why)),
    }
}

/// Discount used to bring arbitrary positive budgets under one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaleParameters {
    pub delta: f64,
}

/// Maps budgets `B` under discount `delta` to budgets `delta * B` under
/// discount 1. A profile `w` under the original game has the same
/// centralities as `delta * w` under the returned one.
pub fn rescale(d: &InstanceDraft, r: RescaleParameters) -> Result<GameInstance> {
    if !(r.delta > 0.0) {
        return Err(Error::Config(format!(
            "delta must be positive, got {}",
            r.delta
        )));
    }
    if let Some((i, &b)) = d.budgets.iter().enumerate().find(|(_, &b)| !(b > 0.0)) {
        return Err(Error::Config(format!("B_{} = {b} must be positive", i + 1)));
    }
    let bmax = d.budgets.iter().copied().fold(0.0, f64::max);
    let product = r.delta * bmax;
    if product >= 1.0 {
        return Err(Error::RescaleBound {
            product,
            bound: 1.0 / bmax,
        });
    }
    InstanceDraft {
        budgets: d.budgets.iter().map(|b| r.delta * b).collect(),
        ..d.clone()
    }
    .build()
}
