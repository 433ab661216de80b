mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::RunReport;

/// Default per-rational bit budget of exact-arithmetic modes.
pub const DEFAULT_BUDGET_BITS: u64 = 1 << 20;

#[derive(Parser, Debug)]
#[command(
    name = "lfpsolve",
    version,
    about = "Certified least fixed points of probabilistic polynomial systems"
)]
pub struct Cli {
    /// Print a structured JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads for the parallel inner loops (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Include the wall-clock time in the report.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify every variable and approximate the least fixed point.
    Solve(SolveArgs),
    /// Decide whether one coordinate of the least fixed point exceeds a threshold.
    Decide(DecideArgs),
    /// Convert a grammar to an approximately equivalent Chomsky normal form.
    Cnf(CnfArgs),
    /// Approximate the probability that a grammar generates a string.
    Stringprob(StringprobArgs),
    /// Estimate an extinction probability by Monte Carlo simulation.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum InputFormat {
    /// `.bp` files are branching processes, anything else is tried as a PPS first.
    Auto,
    Pps,
    Bp,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SolveModeArg {
    Rounded,
    Exact,
}

#[derive(Args, Debug)]
pub struct BudgetArg {
    /// Bit budget per rational for exact arithmetic.
    #[arg(long, env = "LFPSOLVE_BUDGET_BITS", default_value_t = DEFAULT_BUDGET_BITS)]
    pub budget_bits: u64,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    pub file: PathBuf,
    /// Precision `j`: every value is within `2^-j` of the least fixed point.
    #[arg(long, default_value_t = 60)]
    pub bits: u64,
    #[arg(long, value_enum, default_value_t = SolveModeArg::Rounded)]
    pub mode: SolveModeArg,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    #[command(flatten)]
    pub budget: BudgetArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DecideModeArg {
    /// Separation-bound mode for up to three Interior variables.
    Auto,
    Sep,
    Exact,
}

#[derive(Args, Debug)]
pub struct DecideArgs {
    pub file: PathBuf,
    /// Variable name or 0-based index.
    #[arg(long)]
    pub coord: String,
    /// Threshold `r` with `0 < r < 1`, as a fraction or decimal.
    #[arg(long)]
    pub threshold: String,
    #[arg(long, value_enum, default_value_t = DecideModeArg::Auto)]
    pub mode: DecideModeArg,
    /// Run even when the separation bound is impractical: `auto` switches to
    /// exact mode, `sep` runs regardless.
    #[arg(long)]
    pub force_exact: bool,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    #[command(flatten)]
    pub budget: BudgetArg,
}

#[derive(Args, Debug)]
pub struct GrammarArgs {
    pub file: PathBuf,
    /// Tolerance, as a fraction, decimal or `1e-6`.
    #[arg(long, default_value = "1e-6")]
    pub delta: String,
    /// Route missing probability mass to a dead nonterminal instead of
    /// rejecting improper grammars.
    #[arg(long)]
    pub auto_proper: bool,
}

#[derive(Args, Debug)]
pub struct CnfArgs {
    #[command(flatten)]
    pub grammar: GrammarArgs,
    /// Longest string length the approximation must cover.
    #[arg(long, default_value_t = 10)]
    pub maxlen: usize,
    /// Write the grammar here instead of into the report.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StringprobArgs {
    #[command(flatten)]
    pub grammar: GrammarArgs,
    /// Whitespace-separated terminals, or one terminal per character when the
    /// string has no whitespace. The empty string is ε.
    #[arg(long, allow_hyphen_values = true)]
    pub string: String,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub file: PathBuf,
    /// Type whose extinction probability is estimated.
    #[arg(long = "type")]
    pub type_name: String,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generations after which a trajectory counts as surviving.
    #[arg(long, default_value_t = 2000)]
    pub gen_cap: u64,
    /// Population above which a trajectory counts as surviving.
    #[arg(long, default_value_t = 10_000)]
    pub pop_cap: u64,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let started = Instant::now();
    // Exact modes build rationals with up to `--budget-bits` bits, and bignum
    // division recurses deeply on such operands.
    let worker = std::thread::Builder::new()
        .stack_size(512 << 20)
        .spawn(move || {
            let report: RunReport = commands::run(&cli.command);
            (cli, report)
        })
        .expect("spawn worker thread");
    let (cli, mut report) = worker.join().expect("worker thread");
    if cli.timing {
        report.wall_time_ms = Some(started.elapsed().as_millis());
    }
    if cli.json {
        println!("{}", report.render_json());
    } else {
        print!("{}", report.render_text());
    }
    ExitCode::from(report.exit_status as u8)
}
