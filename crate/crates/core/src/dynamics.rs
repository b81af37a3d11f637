//! Sequential best-response dynamics.
//!
//! Standard mode: at each step one scheduled agent replaces its row with the
//! canonical single-edge best response (lazily kept when the current row is
//! already a best response). Modified mode only ever selects agents that have
//! a strict improvement, which makes the agent's centrality strictly increase
//! every step and ends in finitely many steps.
//!
//! Convergence is judged on the v-residual of the current profile, never on
//! the profile itself: tied best responses may keep changing rows while the
//! centralities stay put.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::centrality::katz_solve;
use crate::game::{best_response, v_gaps};
use crate::instance::{ensure_feasible, AllocationProfile, GameInstance};
use crate::{Error, Result};

/// Order in which agents move.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Scheduler {
    /// Agents `0, 1, ..., n-1, 0, ...`.
    RoundRobin,
    /// Independent uniform draws from a ChaCha8 stream seeded with `seed`.
    UniformRandom { seed: u64 },
    /// A fixed finite sequence; the run stops when it is exhausted.
    Explicit { agents: Vec<usize> },
}

impl Scheduler {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Scheduler::UniformRandom { seed } => Some(*seed),
            _ => None,
        }
    }
}

struct ScheduleState<'a> {
    scheduler: &'a Scheduler,
    n: usize,
    cursor: usize,
    rng: Option<ChaCha8Rng>,
}

impl<'a> ScheduleState<'a> {
    fn new(scheduler: &'a Scheduler, n: usize) -> Self {
        let rng = scheduler.seed().map(ChaCha8Rng::seed_from_u64);
        Self {
            scheduler,
            n,
            cursor: 0,
            rng,
        }
    }

    /// Next agent, or `None` once an explicit sequence runs out.
    fn next(&mut self) -> Option<usize> {
        match self.scheduler {
            Scheduler::RoundRobin => {
                let i = self.cursor % self.n;
                self.cursor += 1;
                Some(i)
            }
            Scheduler::UniformRandom { .. } => {
                Some(self.rng.as_mut().unwrap().gen_range(0..self.n))
            }
            Scheduler::Explicit { agents } => {
                let i = agents.get(self.cursor).copied();
                self.cursor += 1;
                i
            }
        }
    }

    /// Next agent restricted to `eligible` (nonempty, ascending).
    fn next_among(&mut self, eligible: &[usize]) -> Option<usize> {
        match self.scheduler {
            Scheduler::RoundRobin => {
                let start = self.cursor % self.n;
                let i = eligible
                    .iter()
                    .copied()
                    .find(|&i| i >= start)
                    .unwrap_or(eligible[0]);
                self.cursor = i + 1;
                Some(i)
            }
            Scheduler::UniformRandom { .. } => {
                let k = self.rng.as_mut().unwrap().gen_range(0..eligible.len());
                Some(eligible[k])
            }
            Scheduler::Explicit { .. } => loop {
                let i = self.next()?;
                if eligible.contains(&i) {
                    return Some(i);
                }
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BrdMode {
    Standard,
    Modified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrdConfig {
    pub scheduler: Scheduler,
    pub max_steps: usize,
    /// Convergence threshold on `‖v(c) - c‖∞`.
    pub tol: f64,
    /// Keep the current row when it is already a best response.
    pub lazy: bool,
    pub mode: BrdMode,
}

impl BrdConfig {
    /// Standard, lazy, `500 n` steps, default tolerance.
    pub fn standard(n: usize, scheduler: Scheduler) -> Self {
        Self {
            scheduler,
            max_steps: 500 * n.max(1),
            tol: crate::DEFAULT_TOL,
            lazy: true,
            mode: BrdMode::Standard,
        }
    }

    /// Modified mode with a generous step guard.
    pub fn modified(scheduler: Scheduler) -> Self {
        Self {
            scheduler,
            max_steps: 1_000_000,
            tol: crate::DEFAULT_TOL,
            lazy: false,
            mode: BrdMode::Modified,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if let Scheduler::Explicit { agents } = &self.scheduler {
            if let Some(&a) = agents.iter().find(|&&a| a >= n) {
                return Err(Error::AgentOutOfRange(a));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub agent: usize,
    /// The agent's row after the step.
    pub row: Vec<f64>,
    /// Whether the row was replaced (false for a lazy keep).
    pub rewritten: bool,
    pub centralities: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalStatus {
    Converged,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrdTrace {
    pub mode: BrdMode,
    pub seed: Option<u64>,
    pub initial_centralities: Vec<f64>,
    pub initial_residual: f64,
    pub records: Vec<StepRecord>,
    #[serde(skip)]
    pub terminal: AllocationProfile,
    pub status: TerminalStatus,
    pub steps: usize,
}

impl BrdTrace {
    pub fn terminal_centralities(&self) -> &[f64] {
        self.records
            .last()
            .map(|r| r.centralities.as_slice())
            .unwrap_or(&self.initial_centralities)
    }

    pub fn terminal_residual(&self) -> f64 {
        self.records
            .last()
            .map(|r| r.residual)
            .unwrap_or(self.initial_residual)
    }

    /// Writes `step,agent,residual,c_1..c_n` with one header row. Step 0 is
    /// the initial profile and has an empty agent field; agents are 1-based.
    /// Floats carry 17 significant digits. `comments` are emitted first as
    /// `# ` lines.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        let n = self.initial_centralities.len();
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string(), "agent".into(), "residual".into()];
        header.extend((1..=n).map(|k| format!("c_{k}")));
        wtr.write_record(&header)?;
        let fmt = |v: f64| format!("{v:.16e}");
        let mut row = vec!["0".to_string(), String::new(), fmt(self.initial_residual)];
        row.extend(self.initial_centralities.iter().map(|&v| fmt(v)));
        wtr.write_record(&row)?;
        for r in &self.records {
            let mut row = vec![
                r.step.to_string(),
                (r.agent + 1).to_string(),
                fmt(r.residual),
            ];
            row.extend(r.centralities.iter().map(|&v| fmt(v)));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn residual_of(g: &GameInstance, c: &[f64]) -> f64 {
    v_gaps(g, c).iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Runs standard or modified dynamics according to `cfg.mode`.
pub fn run_dynamics(g: &GameInstance, w0: &AllocationProfile, cfg: &BrdConfig) -> Result<BrdTrace> {
    match cfg.mode {
        BrdMode::Standard => run_brd(g, w0, cfg),
        BrdMode::Modified => run_modified_brd(g, w0, cfg),
    }
}

/// Standard sequential best-response dynamics (ignores `cfg.mode`).
pub fn run_brd(g: &GameInstance, w0: &AllocationProfile, cfg: &BrdConfig) -> Result<BrdTrace> {
    cfg.validate(g.n())?;
    ensure_feasible(g, w0)?;
    let mut w = w0.clone();
    let mut c = katz_solve(&w)?.into_inner();
    let initial_residual = residual_of(g, &c);
    let mut trace = BrdTrace {
        mode: BrdMode::Standard,
        seed: cfg.scheduler.seed(),
        initial_centralities: c.clone(),
        initial_residual,
        records: Vec::new(),
        terminal: w0.clone(),
        status: TerminalStatus::Converged,
        steps: 0,
    };
    let mut residual = initial_residual;
    let mut schedule = ScheduleState::new(&cfg.scheduler, g.n());
    let mut step = 0;
    while residual > cfg.tol {
        if step == cfg.max_steps {
            trace.status = TerminalStatus::StepLimit;
            break;
        }
        let Some(i) = schedule.next() else {
            trace.status = TerminalStatus::StepLimit;
            break;
        };
        step += 1;
        let gap = v_gaps(g, &c)[i];
        let rewritten = !(cfg.lazy && gap.abs() <= cfg.tol);
        if rewritten {
            let br = best_response(g, i, &w)?;
            w.set_row(i, &br.canonical);
            c = katz_solve(&w)?.into_inner();
            residual = residual_of(g, &c);
        }
        trace.records.push(StepRecord {
            step,
            agent: i,
            row: w.row(i).to_vec(),
            rewritten,
            centralities: c.clone(),
            residual,
        });
    }
    trace.steps = step;
    trace.terminal = w;
    Ok(trace)
}

/// Agents with a strict better response: `v_i(c(w)) > c_i(w) + tol`.
pub fn select_agents_with_improvement(
    g: &GameInstance,
    w: &AllocationProfile,
    tol: f64,
) -> Result<Vec<usize>> {
    ensure_feasible(g, w)?;
    let c = katz_solve(w)?;
    Ok(improving(g, c.values(), tol))
}

fn improving(g: &GameInstance, c: &[f64], tol: f64) -> Vec<usize> {
    v_gaps(g, c)
        .iter()
        .enumerate()
        .filter(|(_, &gap)| gap > tol)
        .map(|(i, _)| i)
        .collect()
}

/// Modified dynamics: only agents with a strict improvement move, always to
/// a single-edge best response. Stops as soon as no agent can improve, at
/// which point the profile certifies as an equilibrium at `cfg.tol`.
pub fn run_modified_brd(
    g: &GameInstance,
    w0: &AllocationProfile,
    cfg: &BrdConfig,
) -> Result<BrdTrace> {
    cfg.validate(g.n())?;
    ensure_feasible(g, w0)?;
    let mut w = w0.clone();
    let mut c = katz_solve(&w)?.into_inner();
    let initial_residual = residual_of(g, &c);
    let mut trace = BrdTrace {
        mode: BrdMode::Modified,
        seed: cfg.scheduler.seed(),
        initial_centralities: c.clone(),
        initial_residual,
        records: Vec::new(),
        terminal: w0.clone(),
        status: TerminalStatus::Converged,
        steps: 0,
    };
    let mut schedule = ScheduleState::new(&cfg.scheduler, g.n());
    let mut step = 0;
    loop {
        let eligible = improving(g, &c, cfg.tol);
        if eligible.is_empty() {
            break;
        }
        if step == cfg.max_steps {
            trace.status = TerminalStatus::StepLimit;
            break;
        }
        let Some(i) = schedule.next_among(&eligible) else {
            trace.status = TerminalStatus::StepLimit;
            break;
        };
        step += 1;
        let br = best_response(g, i, &w)?;
        w.set_row(i, &br.canonical);
        c = katz_solve(&w)?.into_inner();
        trace.records.push(StepRecord {
            step,
            agent: i,
            row: br.canonical,
            rewritten: true,
            centralities: c.clone(),
            residual: residual_of(g, &c),
        });
    }
    trace.steps = step;
    trace.terminal = w;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{i2, i3};
    use crate::game::is_nash;
    use crate::linalg::max_abs_diff;

    #[test]
    fn first_steps_on_two_agents() {
        let g = i3();
        let cfg = BrdConfig::standard(2, Scheduler::RoundRobin);
        let t = run_brd(&g, &AllocationProfile::zero(2), &cfg).unwrap();
        assert_eq!(t.status, TerminalStatus::Converged);
        // agent 1: f_11 = 2 beats f_21 = 1, so the self-loop
        assert_eq!(t.records[0].agent, 0);
        assert_eq!(t.records[0].row, vec![0.5, 0.0]);
        assert_eq!(t.records[0].centralities, vec![1.0, 0.0]);
        assert_eq!(t.records[1].row, vec![0.25, 0.0]);
        assert!(max_abs_diff(t.terminal_centralities(), &[1.0, 0.5]) < 1e-12);
        assert_eq!(t.steps, 2);
    }

    #[test]
    fn equilibrium_is_absorbing_when_lazy() {
        let g = i3();
        let ne = AllocationProfile::from_rows(vec![vec![0.5, 0.0], vec![0.25, 0.0]]).unwrap();
        let t = run_brd(&g, &ne, &BrdConfig::standard(2, Scheduler::RoundRobin)).unwrap();
        assert_eq!(t.steps, 0);
        assert!(t.records.is_empty());
        assert_eq!(t.terminal, ne);
        let t = run_modified_brd(&g, &ne, &BrdConfig::modified(Scheduler::RoundRobin)).unwrap();
        assert_eq!(t.steps, 0);
        assert_eq!(t.status, TerminalStatus::Converged);
    }

    #[test]
    fn modified_terminates_quickly() {
        let g = i3();
        let t = run_modified_brd(
            &g,
            &AllocationProfile::zero(2),
            &BrdConfig::modified(Scheduler::RoundRobin),
        )
        .unwrap();
        assert!(t.steps <= 4);
        assert!(max_abs_diff(t.terminal_centralities(), &[1.0, 0.5]) < 1e-12);
        assert!(is_nash(&g, &t.terminal, 1e-10).unwrap().is_nash);
    }

    #[test]
    fn improving_agents() {
        let g = i2();
        let w = AllocationProfile::from_rows(vec![vec![0.0, 0.5], vec![0.0, 0.0]]).unwrap();
        assert_eq!(
            select_agents_with_improvement(&g, &w, 1e-10).unwrap(),
            vec![1]
        );
        assert_eq!(
            select_agents_with_improvement(&g, &AllocationProfile::zero(2), 1e-10).unwrap(),
            vec![0, 1]
        );
        let ne = w.with_row(1, &[0.25, 0.0]);
        assert!(select_agents_with_improvement(&g, &ne, 1e-10)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn step_limit_and_explicit_schedule() {
        let g = i3();
        let cfg = BrdConfig {
            max_steps: 1,
            ..BrdConfig::standard(2, Scheduler::RoundRobin)
        };
        let t = run_brd(&g, &AllocationProfile::zero(2), &cfg).unwrap();
        assert_eq!(t.status, TerminalStatus::StepLimit);
        assert_eq!(t.steps, 1);

        let cfg = BrdConfig::standard(2, Scheduler::Explicit { agents: vec![1, 1] });
        let t = run_brd(&g, &AllocationProfile::zero(2), &cfg).unwrap();
        assert_eq!(t.status, TerminalStatus::StepLimit);
        assert_eq!(t.steps, 2);

        let cfg = BrdConfig::standard(2, Scheduler::Explicit { agents: vec![5] });
        assert!(matches!(
            run_brd(&g, &AllocationProfile::zero(2), &cfg),
            Err(Error::AgentOutOfRange(5))
        ));
        let cfg = BrdConfig::standard(2, Scheduler::RoundRobin).with_tol(0.0);
        assert!(run_brd(&g, &AllocationProfile::zero(2), &cfg).is_err());
    }

    #[test]
    fn infeasible_start_is_refused() {
        let g = i3();
        let w = AllocationProfile::from_rows(vec![vec![0.6, 0.0], vec![0.0, 0.0]]).unwrap();
        let cfg = BrdConfig::standard(2, Scheduler::RoundRobin);
        assert!(matches!(run_brd(&g, &w, &cfg), Err(Error::Infeasible(_))));
        assert!(matches!(
            run_modified_brd(&g, &w, &BrdConfig::modified(Scheduler::RoundRobin)),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn csv_layout() {
        let g = i3();
        let t = run_brd(
            &g,
            &AllocationProfile::zero(2),
            &BrdConfig::standard(2, Scheduler::UniformRandom { seed: 4 }),
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, &["seed=4".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# seed=4");
        assert_eq!(lines[1], "step,agent,residual,c_1,c_2");
        assert!(lines[2].starts_with("0,,"));
        assert_eq!(lines.len(), 3 + t.records.len());
        let last: Vec<&str> = lines.last().unwrap().split(',').collect();
        assert_eq!(
            last[3].parse::<f64>().unwrap(),
            t.terminal_centralities()[0]
        );
    }
}
