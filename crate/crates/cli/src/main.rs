use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod meta;

/// Experiments with the budget-constrained Katz-centrality network formation game.
#[derive(Debug, Parser)]
#[command(name = "katzforge", version)]
struct Cli {
    /// Convergence / certification tolerance (overrides KATZFORGE_TOL; default 1e-10).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Compute the equilibrium centralities of an instance.
    Equilibrium(EquilibriumArgs),
    /// Run best-response dynamics and write the trace as CSV.
    Run(RunArgs),
    /// Check whether an allocation is a Nash equilibrium.
    Verify(VerifyArgs),
    /// Structural report and condensation graph for an allocation.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    /// Probability that each ordered pair of distinct agents is an edge.
    #[arg(long, default_value_t = 0.5)]
    pub density: f64,
    /// Add a self-loop for every agent.
    #[arg(long)]
    pub self_loops: bool,
    /// Undirected topology (edges come in both directions).
    #[arg(long)]
    pub symmetric: bool,
    /// Budget range as `lo:hi`, inside (0, 1).
    #[arg(long, default_value = "0.1:0.9", value_parser = parse_range)]
    pub budgets: (f64, f64),
    /// Draw budgets from multiples of this step only.
    #[arg(long)]
    pub budget_step: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instance file to write (stdout when absent).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    pub instance: PathBuf,
    /// Certificate file to write (stdout when absent).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Standard,
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchedulerArg {
    #[value(alias = "round-robin")]
    Rr,
    #[value(alias = "uniform-random")]
    Random,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "standard")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "rr")]
    pub scheduler: SchedulerArg,
    /// Seed for the random scheduler and for `--w0 random`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run one independent trace per seed in `a..b` (or `a..=b`).
    #[arg(long, value_parser = parse_seeds, conflicts_with = "seed")]
    pub seeds: Option<Seeds>,
    /// Worker threads for `--seeds`.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Initial profile: `zero`, `random` or `file:<path>`.
    #[arg(long, default_value = "zero")]
    pub w0: String,
    /// Step cap (default 500 n, or 1000000 for modified dynamics).
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Recompute the best response even when the current row already is one.
    #[arg(long)]
    pub no_lazy: bool,
    /// Trace CSV to write (stdout when absent).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Write the terminal allocation here.
    #[arg(long = "final")]
    pub final_allocation: Option<PathBuf>,
    /// Also write the full trace as JSON next to `--out`.
    #[arg(long, requires = "out")]
    pub full_trace: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub instance: PathBuf,
    pub allocation: PathBuf,
    /// Verdict file to write (stdout when absent).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub instance: PathBuf,
    pub allocation: PathBuf,
    /// Report file to write (stdout when absent).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Condensation graph in Graphviz format.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    /// Tolerance for comparing centralities in structure checks.
    #[arg(long, default_value_t = 1e-6)]
    pub centrality_tol: f64,
    /// Longest cycle examined by the parity check.
    #[arg(long, default_value_t = 12)]
    pub max_cycle_len: usize,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad lower bound {lo:?}"))?;
    let hi = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad upper bound {hi:?}"))?;
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let (a, b, inclusive) = if let Some((a, b)) = s.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = s.split_once("..") {
        (a, b, false)
    } else {
        return Err("expected a..b or a..=b".into());
    };
    let a: u64 = a.trim().parse().map_err(|_| format!("bad seed {a:?}"))?;
    let b: u64 = b.trim().parse().map_err(|_| format!("bad seed {b:?}"))?;
    let seeds: Vec<u64> = if inclusive {
        (a..=b).collect()
    } else {
        (a..b).collect()
    };
    if seeds.is_empty() {
        return Err(format!("empty seed range {s}"));
    }
    Ok(Seeds(seeds))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(commands::EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::dispatch(cli.tol, cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("katzforge: {e:#}");
            ExitCode::from(commands::exit_code_for(&e))
        }
    }
}
