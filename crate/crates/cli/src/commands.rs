use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use katzforge::analysis::{analyze, scc_condensation, AnalysisTolerances};
use katzforge::dynamics::{run_dynamics, BrdConfig, BrdTrace, Scheduler, TerminalStatus};
use katzforge::game::{equilibrium_centralities, is_nash};
use katzforge::instance::io::{
    parse_allocation, parse_instance, serialize_allocation, serialize_instance,
};
use katzforge::instance::{
    feasibility_violation, generate_random_instance, random_profile, RandomInstanceParams,
};
use katzforge::{AllocationProfile, GameInstance};

use crate::meta::{per_seed_path, read, resolve_tol, with_meta, write, Meta, TOOL};
use crate::{
    AnalyzeArgs, Command, EquilibriumArgs, GenArgs, ModeArg, RunArgs, SchedulerArg, VerifyArgs,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_STEP_LIMIT: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;

pub fn exit_code_for(e: &anyhow::Error) -> u8 {
    let infeasible = e.chain().any(|c| {
        matches!(
            c.downcast_ref::<katzforge::Error>(),
            Some(katzforge::Error::Infeasible(_))
        )
    });
    if infeasible {
        EXIT_INFEASIBLE
    } else {
        EXIT_USAGE
    }
}

pub fn dispatch(tol: Option<f64>, command: Command) -> Result<u8> {
    match command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Equilibrium(a) => cmd_equilibrium(resolve_tol(tol)?, &a),
        Command::Run(a) => cmd_run(resolve_tol(tol)?, &a),
        Command::Verify(a) => cmd_verify(resolve_tol(tol)?, &a),
        Command::Analyze(a) => cmd_analyze(resolve_tol(tol)?, &a),
    }
}

fn load_instance(path: &Path) -> Result<(GameInstance, String)> {
    let text = read(path)?;
    let g = parse_instance(&text).with_context(|| format!("instance {}", path.display()))?;
    Ok((g, text))
}

fn load_allocation(path: &Path, n: usize) -> Result<(AllocationProfile, String)> {
    let text = read(path)?;
    let w = parse_allocation(&text, n).with_context(|| format!("allocation {}", path.display()))?;
    Ok((w, text))
}

fn cmd_gen(a: &GenArgs) -> Result<u8> {
    let params = RandomInstanceParams {
        n: a.n,
        edge_density: a.density,
        self_loops: a.self_loops,
        symmetric: a.symmetric,
        budget_range: a.budgets,
        budget_step: a.budget_step,
        seed: a.seed,
    };
    let provenance = format!(
        "{TOOL} gen n={} density={} self_loops={} symmetric={} budgets={}:{}{} seed={}",
        a.n,
        a.density,
        a.self_loops,
        a.symmetric,
        a.budgets.0,
        a.budgets.1,
        a.budget_step
            .map_or(String::new(), |s| format!(" budget_step={s}")),
        a.seed
    );
    let g = generate_random_instance(&params)?.with_name(provenance);
    write(a.out.as_deref(), &serialize_instance(&g))?;
    let lo = g.budgets().iter().copied().fold(f64::INFINITY, f64::min);
    eprintln!(
        "n = {}, |E| = {}, B in [{lo}, {}]",
        g.n(),
        g.topology().edge_count(),
        g.max_budget()
    );
    Ok(EXIT_OK)
}

fn cmd_equilibrium(tol: f64, a: &EquilibriumArgs) -> Result<u8> {
    let (g, text) = load_instance(&a.instance)?;
    let cert = equilibrium_centralities(&g, tol);
    let meta = Meta::new(Some(&text), None, tol);
    write(a.out.as_deref(), &with_meta(&cert, &meta)?)?;
    eprintln!(
        "c* after {} iterations, residual {:e}, contraction rate {}",
        cert.iterations, cert.residual, cert.contraction_rate
    );
    Ok(EXIT_OK)
}

enum InitialProfile {
    Zero,
    Random,
    File(PathBuf),
}

impl InitialProfile {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "random" => Ok(Self::Random),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(Self::File(p.into())),
                _ => bail!("--w0 must be zero, random or file:<path>, got {s:?}"),
            },
        }
    }

    fn build(&self, g: &GameInstance, seed: u64) -> Result<AllocationProfile> {
        Ok(match self {
            Self::Zero => AllocationProfile::zero(g.n()),
            Self::Random => random_profile(g, &mut ChaCha8Rng::seed_from_u64(seed)),
            Self::File(p) => load_allocation(p, g.n())?.0,
        })
    }
}

struct RunOutputs {
    csv: Option<PathBuf>,
    final_allocation: Option<PathBuf>,
    full_trace: Option<PathBuf>,
}

#[derive(Serialize)]
struct FullTrace<'a> {
    #[serde(flatten)]
    trace: &'a BrdTrace,
    terminal_weights: Vec<Vec<f64>>,
}

fn full_trace_path(csv: &Path) -> PathBuf {
    if csv.extension().is_some_and(|e| e == "json") {
        csv.with_extension("full.json")
    } else {
        csv.with_extension("json")
    }
}

fn config_for(a: &RunArgs, n: usize, seed: u64, tol: f64) -> BrdConfig {
    let scheduler = match a.scheduler {
        SchedulerArg::Rr => Scheduler::RoundRobin,
        SchedulerArg::Random => Scheduler::UniformRandom { seed },
    };
    let mut cfg = match a.mode {
        ModeArg::Standard => BrdConfig::standard(n, scheduler),
        ModeArg::Modified => BrdConfig::modified(scheduler),
    }
    .with_tol(tol);
    if let Some(m) = a.max_steps {
        cfg.max_steps = m;
    }
    cfg.lazy = !a.no_lazy;
    cfg
}

fn run_one(
    a: &RunArgs,
    g: &GameInstance,
    text: &str,
    tol: f64,
    seed: u64,
    out: &RunOutputs,
) -> Result<BrdTrace> {
    let w0 = InitialProfile::parse(&a.w0)?.build(g, seed)?;
    let cfg = config_for(a, g.n(), seed, tol);
    let trace = run_dynamics(g, &w0, &cfg)?;
    let meta = Meta::new(Some(text), Some(seed), tol)
        .with("mode", format!("{:?}", a.mode).to_lowercase())
        .with("scheduler", format!("{:?}", a.scheduler).to_lowercase())
        .with("w0", &a.w0)
        .with("lazy", cfg.lazy)
        .with("max_steps", cfg.max_steps);
    let mut csv = Vec::new();
    trace.write_csv(&mut csv, &meta.comment_lines())?;
    write(out.csv.as_deref(), &String::from_utf8(csv)?)?;
    if let Some(p) = &out.final_allocation {
        write(Some(p), &serialize_allocation(&trace.terminal))?;
    }
    if let Some(p) = &out.full_trace {
        let body = FullTrace {
            trace: &trace,
            terminal_weights: trace.terminal.rows(),
        };
        write(Some(p), &with_meta(&body, &meta)?)?;
    }
    Ok(trace)
}

fn summary(seed: u64, t: &BrdTrace) -> String {
    let status = match t.status {
        TerminalStatus::Converged => "converged",
        TerminalStatus::StepLimit => "step limit",
    };
    format!(
        "seed {seed}: {status} after {} steps, residual {:e}",
        t.steps,
        t.terminal_residual()
    )
}

fn cmd_run(tol: f64, a: &RunArgs) -> Result<u8> {
    let (g, text) = load_instance(&a.instance)?;
    InitialProfile::parse(&a.w0)?;
    let traces = match &a.seeds {
        None => {
            let out = RunOutputs {
                csv: a.out.clone(),
                final_allocation: a.final_allocation.clone(),
                full_trace: a
                    .full_trace
                    .then(|| full_trace_path(a.out.as_ref().unwrap())),
            };
            vec![(a.seed, run_one(a, &g, &text, tol, a.seed, &out)?)]
        }
        Some(seeds) => {
            let Some(base) = &a.out else {
                bail!("--seeds needs --out to name the per-seed trace files");
            };
            if a.jobs == 0 {
                bail!("--jobs must be at least 1");
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(a.jobs)
                .build()?;
            pool.install(|| {
                seeds
                    .0
                    .par_iter()
                    .map(|&seed| {
                        let csv = per_seed_path(base, seed);
                        let out = RunOutputs {
                            full_trace: a.full_trace.then(|| full_trace_path(&csv)),
                            final_allocation: a
                                .final_allocation
                                .as_deref()
                                .map(|p| per_seed_path(p, seed)),
                            csv: Some(csv),
                        };
                        run_one(a, &g, &text, tol, seed, &out).map(|t| (seed, t))
                    })
                    .collect::<Result<Vec<_>>>()
            })?
        }
    };
    let mut code = EXIT_OK;
    for (seed, t) in &traces {
        eprintln!("{}", summary(*seed, t));
        if t.status == TerminalStatus::StepLimit {
            code = EXIT_STEP_LIMIT;
        }
    }
    Ok(code)
}

/// Writes an "infeasible" verdict and returns the exit code for it, or
/// `None` when the allocation is feasible.
fn reject_infeasible(
    g: &GameInstance,
    w: &AllocationProfile,
    meta: &Meta,
    out: Option<&Path>,
) -> Result<Option<u8>> {
    match feasibility_violation(g, w)? {
        None => Ok(None),
        Some(why) => {
            let body = json!({ "verdict": "infeasible", "reason": why });
            write(out, &with_meta(&body, meta)?)?;
            eprintln!("infeasible allocation: {why}");
            Ok(Some(EXIT_INFEASIBLE))
        }
    }
}

fn cmd_verify(tol: f64, a: &VerifyArgs) -> Result<u8> {
    let (g, text) = load_instance(&a.instance)?;
    let (w, wtext) = load_allocation(&a.allocation, g.n())?;
    let meta = Meta::new(Some(&text), None, tol)
        .with("allocation_sha256", crate::meta::sha256_hex(&wtext));
    if let Some(code) = reject_infeasible(&g, &w, &meta, a.out.as_deref())? {
        return Ok(code);
    }
    let v = is_nash(&g, &w, tol)?;
    let body = json!({
        "verdict": v.is_nash,
        "residual": v.residual,
        "v_gap": v.v_gap,
        "centralities": v.centralities,
        "distance_to_c_star": v.distance_to_c_star,
    });
    write(a.out.as_deref(), &with_meta(&body, &meta)?)?;
    eprintln!("nash: {}, residual {:e}", v.is_nash, v.residual);
    for (i, gap) in v.v_gap.iter().enumerate() {
        eprintln!("  agent {}: v-gap {gap:e}", i + 1);
    }
    Ok(EXIT_OK)
}

fn cmd_analyze(tol: f64, a: &AnalyzeArgs) -> Result<u8> {
    let (g, text) = load_instance(&a.instance)?;
    let (w, wtext) = load_allocation(&a.allocation, g.n())?;
    let atol = AnalysisTolerances {
        centrality: a.centrality_tol,
        max_cycle_len: a.max_cycle_len,
        ..AnalysisTolerances::default()
    };
    if atol.centrality.is_nan() || atol.centrality <= 0.0 {
        bail!("--centrality-tol must be positive");
    }
    let meta = Meta::new(Some(&text), None, tol)
        .with("allocation_sha256", crate::meta::sha256_hex(&wtext))
        .with("centrality_tol", atol.centrality)
        .with("budget_tol", atol.budget)
        .with("max_cycle_len", atol.max_cycle_len);
    if let Some(code) = reject_infeasible(&g, &w, &meta, a.out.as_deref())? {
        return Ok(code);
    }
    let report = analyze(&g, &w, tol, &atol)?;
    let c = is_nash(&g, &w, tol)?.centralities;
    let mut cg = scc_condensation(&w);
    cg.annotate(g.budgets(), &c, &atol);
    let body = json!({ "checks": report.checks, "condensation": cg });
    write(a.out.as_deref(), &with_meta(&body, &meta)?)?;
    if let Some(p) = &a.dot {
        write(Some(p), &cg.to_dot())?;
    }
    for check in &report.checks {
        let status = serde_json::to_value(check.status)?;
        eprintln!("{}: {}", check.name, status.as_str().unwrap_or_default());
    }
    Ok(EXIT_OK)
}
