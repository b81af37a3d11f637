//! Structure of equilibrium networks.
//!
//! Every check evaluates on any feasible profile but is only guaranteed to
//! pass at an equilibrium; checks whose topological hypothesis does not hold
//! report [`CheckStatus::Inapplicable`] rather than pass or fail.

use std::fmt::Write as _;

use serde::Serialize;

use crate::centrality::katz_solve;
use crate::game::is_nash;
use crate::instance::{ensure_feasible, AllocationProfile, GameInstance, BUDGET_TIE_TOL};
use crate::Result;

/// Tolerances for structural checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalysisTolerances {
    /// Absolute tolerance for centrality comparisons.
    pub centrality: f64,
    /// Absolute tolerance for budget equality.
    pub budget: f64,
    /// Longest cycle enumerated by the parity check.
    pub max_cycle_len: usize,
}

impl Default for AnalysisTolerances {
    fn default() -> Self {
        Self {
            centrality: crate::DEFAULT_TOL,
            budget: BUDGET_TIE_TOL,
            max_cycle_len: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    /// Members, ascending.
    pub members: Vec<usize>,
    /// No positive edge leaves the component.
    pub sink: bool,
    /// Common centrality, when all members agree.
    pub alpha: Option<f64>,
    /// Common budget, when all members agree.
    pub gamma: Option<f64>,
}

/// Strongly connected components of the positive-weight digraph of a
/// profile and the acyclic quotient over them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CondensationGraph {
    /// Ordered by smallest member.
    pub components: Vec<Component>,
    /// Distinct component pairs `(from, to)`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Component index of each agent.
    pub component_of: Vec<usize>,
}

fn successors(w: &AllocationProfile) -> Vec<Vec<usize>> {
    (0..w.n()).map(|i| w.support(i)).collect()
}

struct Tarjan<'a> {
    graph: &'a [Vec<usize>],
    index: usize,
    idx: Vec<Option<usize>>,
    low: Vec<usize>,
    stack: Vec<usize>,
    on_stack: Vec<bool>,
    comps: Vec<Vec<usize>>,
}

impl Tarjan<'_> {
    fn visit(&mut self, v: usize) {
        self.idx[v] = Some(self.index);
        self.low[v] = self.index;
        self.index += 1;
        self.stack.push(v);
        self.on_stack[v] = true;
        for &u in &self.graph[v] {
            match self.idx[u] {
                None => {
                    self.visit(u);
                    self.low[v] = self.low[v].min(self.low[u]);
                }
                Some(iu) if self.on_stack[u] => self.low[v] = self.low[v].min(iu),
                Some(_) => {}
            }
        }
        if Some(self.low[v]) == self.idx[v] {
            let mut comp = Vec::new();
            loop {
                let u = self.stack.pop().expect("tarjan stack");
                self.on_stack[u] = false;
                comp.push(u);
                if u == v {
                    break;
                }
            }
            comp.sort_unstable();
            self.comps.push(comp);
        }
    }
}

/// Tarjan decomposition of `G(w)`; components are ordered by smallest member.
pub fn scc_condensation(w: &AllocationProfile) -> CondensationGraph {
    let n = w.n();
    let graph = successors(w);
    let mut t = Tarjan {
        graph: &graph,
        index: 0,
        idx: vec![None; n],
        low: vec![0; n],
        stack: Vec::new(),
        on_stack: vec![false; n],
        comps: Vec::new(),
    };
    for v in 0..n {
        if t.idx[v].is_none() {
            t.visit(v);
        }
    }
    let mut comps = t.comps;
    comps.sort_by_key(|c| c[0]);
    let mut component_of = vec![0; n];
    for (k, c) in comps.iter().enumerate() {
        for &v in c {
            component_of[v] = k;
        }
    }
    let mut edges: Vec<(usize, usize)> = w
        .positive_edges()
        .into_iter()
        .map(|(i, j)| (component_of[i], component_of[j]))
        .filter(|(a, b)| a != b)
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let components = comps
        .into_iter()
        .enumerate()
        .map(|(k, members)| Component {
            sink: !edges.iter().any(|e| e.0 == k),
            members,
            alpha: None,
            gamma: None,
        })
        .collect();
    CondensationGraph {
        components,
        edges,
        component_of,
    }
}

fn common(values: impl Iterator<Item = f64> + Clone, tol: f64) -> Option<f64> {
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    (hi - lo <= tol).then_some(lo)
}

impl CondensationGraph {
    /// Fills in `alpha` and `gamma` for components whose members agree.
    pub fn annotate(&mut self, budgets: &[f64], c: &[f64], tol: &AnalysisTolerances) {
        for comp in &mut self.components {
            comp.alpha = common(comp.members.iter().map(|&k| c[k]), tol.centrality);
            comp.gamma = common(comp.members.iter().map(|&k| budgets[k]), tol.budget);
        }
    }

    /// The quotient graph has no directed cycle.
    pub fn is_acyclic(&self) -> bool {
        let m = self.components.len();
        let mut indeg = vec![0usize; m];
        for &(_, b) in &self.edges {
            indeg[b] += 1;
        }
        let mut ready: Vec<usize> = (0..m).filter(|&k| indeg[k] == 0).collect();
        let mut seen = 0;
        while let Some(k) = ready.pop() {
            seen += 1;
            for &(a, b) in &self.edges {
                if a == k {
                    indeg[b] -= 1;
                    if indeg[b] == 0 {
                        ready.push(b);
                    }
                }
            }
        }
        seen == m
    }

    /// Graphviz rendering; sinks are double circles.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph condensation {\n");
        for (k, comp) in self.components.iter().enumerate() {
            let members: Vec<String> = comp.members.iter().map(|m| (m + 1).to_string()).collect();
            let alpha = comp
                .alpha
                .map_or("non-uniform".into(), |a| format!("{a:.6}"));
            let gamma = comp.gamma.map_or("non-uniform".into(), |g| format!("{g}"));
            let shape = if comp.sink { "doublecircle" } else { "circle" };
            let _ = writeln!(
                s,
                "  scc{k} [label=\"SCC{k}: {{{}}}, α={alpha}, γ={gamma}\", shape={shape}];",
                members.join(",")
            );
        }
        for &(a, b) in &self.edges {
            let _ = writeln!(s, "  scc{a} -> scc{b};");
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inapplicable,
}

/// A concrete counterexample; agents are 1-based as in documents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub agents: Vec<usize>,
    pub detail: String,
}

impl Witness {
    fn new(agents: &[usize], detail: String) -> Self {
        Self {
            agents: agents.iter().map(|a| a + 1).collect(),
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: CheckStatus,
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckOutcome {
    fn from_witnesses(name: &str, witnesses: Vec<Witness>) -> Self {
        Self {
            name: name.into(),
            status: if witnesses.is_empty() {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            witnesses,
            note: None,
        }
    }

    fn inapplicable(name: &str, why: &str) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Inapplicable,
            witnesses: Vec::new(),
            note: Some(why.into()),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub checks: Vec<CheckOutcome>,
}

impl StructureReport {
    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn any_failed(&self) -> bool {
        self.checks.iter().any(CheckOutcome::failed)
    }
}

fn centralities(g: &GameInstance, w: &AllocationProfile) -> Result<Vec<f64>> {
    ensure_feasible(g, w)?;
    Ok(katz_solve(w)?.into_inner())
}

pub const COMPLETE_CLOSED_FORM: &str = "complete-closed-form";
pub const HIERARCHY: &str = "hierarchy";
pub const SCC_UNIFORMITY: &str = "scc-uniformity";
pub const SINK_DOMINANCE: &str = "sink-dominance";
pub const CYCLE_PARITY: &str = "cycle-parity";
pub const NASH: &str = "nash";

/// Complete topology: `c_i = B_i / (1 - B_M)`, every budget fully spent, and
/// every positive edge pointing at a maximum-budget agent.
pub fn check_complete_topology(
    g: &GameInstance,
    w: &AllocationProfile,
    tol: &AnalysisTolerances,
) -> Result<CheckOutcome> {
    if !g.topology().is_complete() {
        return Ok(CheckOutcome::inapplicable(
            COMPLETE_CLOSED_FORM,
            "topology is not complete (all ordered pairs including self-pairs)",
        ));
    }
    let c = centralities(g, w)?;
    let bm = g.max_budget();
    let mut witnesses = Vec::new();
    for i in 0..g.n() {
        let expected = g.budget(i) / (1.0 - bm);
        if (c[i] - expected).abs() > tol.centrality {
            witnesses.push(Witness::new(
                &[i],
                format!("c = {} but B / (1 - B_M) = {expected}", c[i]),
            ));
        }
        let spent = w.row_sum(i);
        if (spent - g.budget(i)).abs() > tol.budget {
            witnesses.push(Witness::new(
                &[i],
                format!("spends {spent} of budget {}", g.budget(i)),
            ));
        }
    }
    for (i, j) in w.positive_edges() {
        if (g.budget(j) - bm).abs() > tol.budget {
            witnesses.push(Witness::new(
                &[i, j],
                format!("edge targets budget {} below B_M = {bm}", g.budget(j)),
            ));
        }
    }
    Ok(CheckOutcome::from_witnesses(
        COMPLETE_CLOSED_FORM,
        witnesses,
    ))
}

/// With self-loops everywhere: every positive edge `i -> j` has
/// `c_i <= c_j`.
pub fn check_hierarchy(
    g: &GameInstance,
    w: &AllocationProfile,
    tol: &AnalysisTolerances,
) -> Result<CheckOutcome> {
    if !g.topology().has_all_self_loops() {
        return Ok(CheckOutcome::inapplicable(
            HIERARCHY,
            "some agent lacks a self-loop",
        ));
    }
    let c = centralities(g, w)?;
    let witnesses = w
        .positive_edges()
        .into_iter()
        .filter(|&(i, j)| c[i] > c[j] + tol.centrality)
        .map(|(i, j)| Witness::new(&[i, j], format!("c = {} above target's {}", c[i], c[j])))
        .collect();
    Ok(CheckOutcome::from_witnesses(HIERARCHY, witnesses))
}

/// With self-loops everywhere: members of each SCC share budget and
/// centrality, and an SCC with at least two members passes its centrality on
/// to every SCC it points at.
pub fn check_scc_uniformity(
    g: &GameInstance,
    w: &AllocationProfile,
    tol: &AnalysisTolerances,
) -> Result<CheckOutcome> {
    if !g.topology().has_all_self_loops() {
        return Ok(CheckOutcome::inapplicable(
            SCC_UNIFORMITY,
            "some agent lacks a self-loop",
        ));
    }
    let c = centralities(g, w)?;
    let mut cg = scc_condensation(w);
    cg.annotate(g.budgets(), &c, tol);
    let mut witnesses = Vec::new();
    for comp in &cg.components {
        if comp.members.len() < 2 {
            continue;
        }
        if comp.alpha.is_none() {
            witnesses.push(Witness::new(
                &comp.members,
                "centralities differ inside SCC".into(),
            ));
        }
        if comp.gamma.is_none() {
            witnesses.push(Witness::new(
                &comp.members,
                "budgets differ inside SCC".into(),
            ));
        }
    }
    for &(a, b) in &cg.edges {
        let source = &cg.components[a];
        if source.members.len() < 2 {
            continue;
        }
        let alpha = c[source.members[0]];
        for &k in &cg.components[b].members {
            if (c[k] - alpha).abs() > tol.centrality {
                witnesses.push(Witness::new(
                    &[source.members[0], k],
                    format!(
                        "target SCC member has c = {} but source SCC has {alpha}",
                        c[k]
                    ),
                ));
            }
        }
    }
    Ok(CheckOutcome::from_witnesses(SCC_UNIFORMITY, witnesses))
}

/// With self-loops everywhere: the largest centrality is attained in a sink
/// component of the condensation.
pub fn check_sink_dominance(
    g: &GameInstance,
    w: &AllocationProfile,
    tol: &AnalysisTolerances,
) -> Result<CheckOutcome> {
    if !g.topology().has_all_self_loops() {
        return Ok(CheckOutcome::inapplicable(
            SINK_DOMINANCE,
            "some agent lacks a self-loop",
        ));
    }
    let c = centralities(g, w)?;
    let cg = scc_condensation(w);
    let global = c.iter().copied().fold(0.0, f64::max);
    let (best_sink, best_agent) = cg
        .components
        .iter()
        .filter(|k| k.sink)
        .flat_map(|k| k.members.iter().map(|&m| (c[m], m)))
        .fold(
            (f64::NEG_INFINITY, 0),
            |acc, x| if x.0 > acc.0 { x } else { acc },
        );
    let mut witnesses = Vec::new();
    if best_sink < global - tol.centrality {
        let top = (0..g.n()).find(|&i| c[i] == global).unwrap_or(0);
        witnesses.push(Witness::new(
            &[top, best_agent],
            format!("max centrality {global} exceeds best sink value {best_sink}"),
        ));
    }
    Ok(CheckOutcome::from_witnesses(SINK_DOMINANCE, witnesses))
}

/// Simple directed cycles of length `2..=max_len` in `G(w)`, each listed
/// once starting from its smallest agent. Enumeration stops after `limit`
/// cycles; the flag reports whether that happened.
pub fn simple_cycles(
    w: &AllocationProfile,
    max_len: usize,
    limit: usize,
) -> (Vec<Vec<usize>>, bool) {
    let graph = successors(w);
    let n = w.n();
    let mut cycles = Vec::new();
    let mut truncated = false;
    let mut path = Vec::new();
    let mut on_path = vec![false; n];

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        graph: &[Vec<usize>],
        start: usize,
        v: usize,
        max_len: usize,
        limit: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        cycles: &mut Vec<Vec<usize>>,
        truncated: &mut bool,
    ) {
        for &u in &graph[v] {
            if *truncated {
                return;
            }
            if u == start && path.len() >= 2 {
                if cycles.len() == limit {
                    *truncated = true;
                    return;
                }
                cycles.push(path.clone());
            } else if u > start && !on_path[u] && path.len() < max_len {
                path.push(u);
                on_path[u] = true;
                dfs(
                    graph, start, u, max_len, limit, path, on_path, cycles, truncated,
                );
                on_path[u] = false;
                path.pop();
            }
        }
    }

    for s in 0..n {
        path.push(s);
        on_path[s] = true;
        dfs(
            &graph,
            s,
            s,
            max_len,
            limit,
            &mut path,
            &mut on_path,
            &mut cycles,
            &mut truncated,
        );
        on_path[s] = false;
        path.pop();
    }
    (cycles, truncated)
}

const CYCLE_LIMIT: usize = 100_000;

/// Undirected topology: every odd cycle of `G(w)` is uniform in budget and
/// centrality; in every even cycle the two alternating classes each are.
pub fn check_cycle_parity(
    g: &GameInstance,
    w: &AllocationProfile,
    tol: &AnalysisTolerances,
) -> Result<CheckOutcome> {
    if !g.topology().is_symmetric() {
        return Ok(CheckOutcome::inapplicable(
            CYCLE_PARITY,
            "topology is not undirected",
        ));
    }
    let c = centralities(g, w)?;
    let (cycles, truncated) = simple_cycles(w, tol.max_cycle_len, CYCLE_LIMIT);
    let mut witnesses = Vec::new();
    for cycle in &cycles {
        let classes: Vec<Vec<usize>> = if cycle.len() % 2 == 1 {
            vec![cycle.clone()]
        } else {
            vec![
                cycle.iter().step_by(2).copied().collect(),
                cycle.iter().skip(1).step_by(2).copied().collect(),
            ]
        };
        for class in classes {
            if common(class.iter().map(|&k| g.budget(k)), tol.budget).is_none() {
                witnesses.push(Witness::new(
                    &class,
                    format!("budgets differ on cycle of length {}", cycle.len()),
                ));
            }
            if common(class.iter().map(|&k| c[k]), tol.centrality).is_none() {
                witnesses.push(Witness::new(
                    &class,
                    format!("centralities differ on cycle of length {}", cycle.len()),
                ));
            }
        }
    }
    let mut out = CheckOutcome::from_witnesses(CYCLE_PARITY, witnesses);
    let mut note = format!(
        "{} cycles of length 2..={}",
        cycles.len(),
        tol.max_cycle_len
    );
    if truncated {
        note.push_str(&format!(", enumeration stopped at {CYCLE_LIMIT}"));
    }
    out.note = Some(note);
    Ok(out)
}

/// All structure checks, preceded by Nash certification at `nash_tol`.
pub fn analyze(
    g: &GameInstance,
    w: &AllocationProfile,
    nash_tol: f64,
    tol: &AnalysisTolerances,
) -> Result<StructureReport> {
    let verdict = is_nash(g, w, nash_tol)?;
    let mut nash = CheckOutcome::from_witnesses(NASH, Vec::new());
    if !verdict.is_nash {
        let worst = (0..g.n())
            .max_by(|&a, &b| verdict.v_gap[a].abs().total_cmp(&verdict.v_gap[b].abs()))
            .unwrap_or(0);
        nash = CheckOutcome::from_witnesses(
            NASH,
            vec![Witness::new(
                &[worst],
                format!("v-gap {}", verdict.v_gap[worst]),
            )],
        );
        nash.note = Some("structure checks below are only guaranteed at an equilibrium".into());
    }
    Ok(StructureReport {
        checks: vec![
            nash,
            check_complete_topology(g, w, tol)?,
            check_hierarchy(g, w, tol)?,
            check_scc_uniformity(g, w, tol)?,
            check_sink_dominance(g, w, tol)?,
            check_cycle_parity(g, w, tol)?,
        ],
    })
}
