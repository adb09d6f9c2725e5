mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tmest::{RegKind, SolverId};

use manifest::RunManifest;

/// Configuration the command refuses to run with (exit code 2).
#[derive(Debug)]
pub struct Rejected(pub String);

impl std::fmt::Display for Rejected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Rejected {}

#[derive(Parser)]
#[command(name = "tmest", version, about = "Traffic-demand estimation from link loads")]
struct Cli {
    /// JSON run manifest; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $TMEST_OUT_DIR, then ./tmest-out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic network instance.
    Generate(GenerateArgs),
    /// Solve one instance with one solver.
    Solve(SolveArgs),
    /// Tune the Slater multiplier by golden-section search.
    TuneLambda(TuneArgs),
    /// Run several solvers on one instance and tabulate them.
    Bench(BenchArgs),
    /// Score a demand vector against the ground truth.
    Eval(EvalArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    links: Option<usize>,
    #[arg(long)]
    demand_lo: Option<f64>,
    #[arg(long)]
    demand_hi: Option<f64>,
    /// Standard deviation of Gaussian noise added to the loads.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Star topology (node 0 at the centre); --links is implied.
    #[arg(long)]
    star: bool,
}

#[derive(Args)]
struct InputArgs {
    /// Directory written by `generate`.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    loads: Option<PathBuf>,
    /// Prior vector; defaults to a uniform prior fitted to the loads.
    #[arg(long)]
    prior: Option<PathBuf>,
    /// Ground-truth demands, for LLA/DA.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    /// ridge, entropy or lasso.
    #[arg(long)]
    reg: Option<RegKind>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Simplex mass for entropy (default: the prior's total).
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eps_tilde: Option<f64>,
    /// Scale the projection accuracies by ||b||.
    #[arg(long)]
    relative: bool,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    r2_init: Option<f64>,
    #[arg(long)]
    r_tilde_init: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    solver: Option<SolverId>,
    /// Penalty weights, comma separated and increasing.
    #[arg(long, value_delimiter = ',')]
    k_schedule: Option<Vec<f64>>,
    /// Wrap fgm/rcd/powell3 in the radius-doubling restart driver.
    #[arg(long)]
    restarts: bool,
    /// Also write a CSV trace.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Radius of the relaxed constraint ||Ax - b|| <= eps_slater.
    #[arg(long)]
    eps_slater: Option<f64>,
    #[arg(long)]
    lambda_lo: Option<f64>,
    #[arg(long)]
    lambda_hi: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Comma separated; default: every solver applicable to the regularizer.
    #[arg(long, value_delimiter = ',')]
    solvers: Option<Vec<SolverId>>,
    #[arg(long, value_delimiter = ',')]
    k_schedule: Option<Vec<f64>>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Demand vector to score.
    #[arg(long)]
    x: Option<PathBuf>,
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

impl InputArgs {
    fn apply(self, m: &mut RunManifest) {
        m.instance = self.instance;
        m.matrix = self.matrix;
        m.loads = self.loads;
        m.prior = self.prior;
        m.truth = self.truth;
    }
}

impl ModelArgs {
    fn apply(self, m: &mut RunManifest) {
        m.reg = self.reg;
        m.lambda = self.lambda;
        m.mass = self.mass;
        m.eps = self.eps;
        m.eps_tilde = self.eps_tilde;
        m.relative = flag(self.relative);
        m.max_iters = self.max_iters;
        m.r2_init = self.r2_init;
        m.r_tilde_init = self.r_tilde_init;
    }
}

/// Manifest holding exactly the flags given on the command line.
fn flags_manifest(cli: Cli) -> RunManifest {
    let mut m = RunManifest { seed: cli.seed, out_dir: cli.out_dir, ..Default::default() };
    let name = match cli.command {
        Command::Generate(a) => {
            m.nodes = a.nodes;
            m.links = a.links;
            m.demand_lo = a.demand_lo;
            m.demand_hi = a.demand_hi;
            m.noise_sigma = a.noise_sigma;
            m.star = flag(a.star);
            "generate"
        }
        Command::Solve(a) => {
            a.input.apply(&mut m);
            a.model.apply(&mut m);
            m.solver = a.solver;
            m.k_schedule = a.k_schedule;
            m.restarts = flag(a.restarts);
            m.trace = flag(a.trace);
            "solve"
        }
        Command::TuneLambda(a) => {
            a.input.apply(&mut m);
            a.model.apply(&mut m);
            m.eps_slater = a.eps_slater;
            m.lambda_lo = a.lambda_lo;
            m.lambda_hi = a.lambda_hi;
            "tune-lambda"
        }
        Command::Bench(a) => {
            a.input.apply(&mut m);
            a.model.apply(&mut m);
            m.solvers = a.solvers;
            m.k_schedule = a.k_schedule;
            "bench"
        }
        Command::Eval(a) => {
            a.input.apply(&mut m);
            m.x = a.x;
            "eval"
        }
    };
    m.command = Some(name.to_string());
    m
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(p) => RunManifest::load(p)?,
        None => RunManifest::default(),
    };
    let m = config.overlay(flags_manifest(cli));
    match m.command.as_deref() {
        Some("generate") => commands::generate(&m),
        Some("solve") => commands::solve(&m),
        Some("tune-lambda") => commands::tune(&m),
        Some("bench") => commands::bench(&m),
        Some("eval") => commands::eval(&m),
        _ => unreachable!("set by flags_manifest"),
    }
}

/// 2 for configuration the run refuses, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Rejected>().is_some() {
        return 2;
    }
    match err.downcast_ref::<tmest::Error>() {
        Some(
            tmest::Error::Unsupported { .. }
            | tmest::Error::InvalidArgument(_)
            | tmest::Error::Dimension { .. }
            | tmest::Error::Parse { .. }
            | tmest::Error::IndexOutOfRange { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
