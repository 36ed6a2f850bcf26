//! `kifer`: experiments on random Schrödinger cocycles from the command line.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use output::{Format, Meta};

#[derive(Parser, Debug)]
#[command(name = "kifer", version, about = "Random Schrödinger cocycles over a Markov shift")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// Seed of every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads for replica-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
enum Cmd {
    /// Pascal-type table a(n, i) or the admissible/allowable word counts.
    Tables(TablesArgs),
    /// Exact or sampled probabilities of the walk events E_n, B_l and C_l.
    Walk(WalkArgs),
    /// Lyapunov exponent estimates.
    Le(LeArgs),
    /// Integrated density of states N(E).
    Ids(IdsArgs),
    /// Eigenvalue counting near 0 on block-structured truncations.
    Gap(GapArgs),
    /// Test a gap series against a modulus of continuity.
    Fit(FitArgs),
    /// Run the invariant suite; exits 1 if any check fails.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct TablesArgs {
    /// Rows 1..=N of the table, columns (n, i, a, a_plus, a_minus).
    #[arg(long, value_name = "N", conflicts_with = "narayana")]
    pub pascal: Option<usize>,
    /// Counts a(n), b(n) for n = 0..=N.
    #[arg(long, value_name = "N")]
    pub narayana: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// Diagonal class with κ ≥ √n/10 over uniform {C, D}ⁿ.
    En,
    /// One half-block event at scale l.
    Bl,
    /// Both halves, i.e. the whole block event.
    Cl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Halves {
    /// Halves of length l + 1.
    Standard,
    /// Halves of length l, as used inside the gap experiment.
    Inner,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    Enumeration,
    Exact,
    ClosedForm,
    MonteCarlo,
}

#[derive(Args, Debug, Serialize)]
pub struct WalkArgs {
    #[arg(long, value_enum, default_value_t = EventKind::En)]
    pub event: EventKind,
    /// Largest word length for E_n.
    #[arg(long = "n", default_value_t = 40)]
    pub n: usize,
    /// Block scales for B_l and C_l (comma separated).
    #[arg(long = "l", value_delimiter = ',', default_values_t = [30usize, 300, 1200, 2700])]
    pub l: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Halves::Inner)]
    pub halves: Halves,
    #[arg(long, value_enum, default_value_t = EvalMode::ClosedForm)]
    pub mode: EvalMode,
    /// Samples per scale in Monte Carlo mode.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CocycleKind {
    /// Transfer matrices of the model potential over the model chain.
    Schrodinger,
    /// Bernoulli(p, 1-p) products of the rotation C and the hyperbolic D.
    Kifer,
    /// Constant transfer matrix of the zero potential.
    Free,
    /// Cocycle induced on the return set {0, a}, with its return time.
    Induced,
    /// Bernoulli cocycle conjugate to the induced one.
    Conjugate,
}

#[derive(Args, Debug, Serialize)]
pub struct LeArgs {
    #[arg(long, value_enum, default_value_t = CocycleKind::Schrodinger)]
    pub cocycle: CocycleKind,
    /// Energies (comma separated).
    #[arg(long = "E", value_delimiter = ',', allow_negative_numbers = true, default_values_t = [0.5f64, 1.0])]
    pub energy: Vec<f64>,
    /// Steps per replica.
    #[arg(long = "n", default_value_t = 100_000)]
    pub n: u64,
    #[arg(long, default_value_t = 8)]
    pub replicas: usize,
    /// Probability of C in the Kifer cocycle.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    Model,
    Free,
}

#[derive(Args, Debug, Serialize)]
pub struct IdsArgs {
    #[arg(long, default_value_t = 2_000)]
    pub dim: usize,
    #[arg(long, default_value_t = 8)]
    pub replicas: usize,
    /// Explicit energies (comma separated); overrides the grid.
    #[arg(long = "E", value_delimiter = ',', allow_negative_numbers = true)]
    pub energy: Vec<f64>,
    #[arg(long, allow_negative_numbers = true, default_value_t = -6.0)]
    pub e_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 3.0)]
    pub e_max: f64,
    #[arg(long, default_value_t = 91)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = PotentialKind::Model)]
    pub potential: PotentialKind,
}

#[derive(Args, Debug, Serialize)]
pub struct GapArgs {
    /// Block scales (comma separated).
    #[arg(long = "l", value_delimiter = ',', default_values_t = [300usize, 1200, 2700])]
    pub l: Vec<usize>,
    /// Blocks per word (default: as many as fit in --max-len).
    #[arg(long = "m")]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 16)]
    pub replicas: usize,
    #[arg(long, default_value_t = 5_000_000)]
    pub max_len: usize,
    /// Also write per-replica rows (replica, n_lm, count, temple) here.
    #[arg(long)]
    pub replica_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// exp(-β (log log 1/r)^γ)
    LogLog,
    /// r^α
    Holder,
    /// exp(-α (log 1/r)^θ)
    WeakHolder,
    /// 1 / log(1/r)
    LogHolder,
}

#[derive(Args, Debug, Serialize)]
pub struct FitArgs {
    /// CSV written by `gap`; without it the experiment runs in-process.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Fit the family to a synthetic series drawn from itself.
    #[arg(long, conflicts_with = "input")]
    pub control: bool,
    #[arg(long, value_enum, default_value_t = FamilyKind::LogLog)]
    pub family: FamilyKind,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 2.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    /// Scales for the in-process experiment or the control series.
    #[arg(long = "l", value_delimiter = ',', default_values_t = [300usize, 1200, 2700, 10800, 43200, 97200])]
    pub l: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    pub replicas: usize,
    #[arg(long, default_value_t = 5_000_000)]
    pub max_len: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    /// Full sizes instead of the quick profile.
    #[arg(long)]
    pub full: bool,
    /// Restrict to these suites (repeatable).
    #[arg(long)]
    pub suite: Vec<String>,
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Tables(_) => "tables",
        Cmd::Walk(_) => "walk",
        Cmd::Le(_) => "le",
        Cmd::Ids(_) => "ids",
        Cmd::Gap(_) => "gap",
        Cmd::Fit(_) => "fit",
        Cmd::Verify(_) => "verify",
    }
}

fn run(cli: &Cli, threads: usize) -> Result<(), commands::Failure> {
    let seed = cli.common.seed;
    let table = match &cli.cmd {
        Cmd::Tables(a) => commands::tables(a)?,
        Cmd::Walk(a) => commands::walk(a, seed)?,
        Cmd::Le(a) => commands::le(a, seed)?,
        Cmd::Ids(a) => commands::ids(a, seed)?,
        Cmd::Gap(a) => commands::gap(a, seed)?,
        Cmd::Fit(a) => commands::fit(a, seed)?,
        Cmd::Verify(a) => commands::verify(a, seed)?,
    };
    let meta = Meta {
        tool: "kifer",
        version: env!("CARGO_PKG_VERSION"),
        command: command_name(&cli.cmd).into(),
        seed,
        threads,
        rng: kifer_core::rng::ALGORITHM,
        config: serde_json::to_value(&cli.cmd).unwrap_or_default(),
    };
    output::emit(&meta, &table, cli.common.format, cli.common.out.as_deref())?;
    if table.notes.iter().any(|(k, v)| k == "failed" && v.as_u64() != Some(0)) {
        return Err(commands::Failure::Verify);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let threads = cli
        .common
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        eprintln!("error: invalid parameter `threads`: must be positive");
        return ExitCode::from(2);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let start = Instant::now();
    let result = run(&cli, threads);
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
