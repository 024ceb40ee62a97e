use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod fail;

use fail::Failure;

#[derive(Parser)]
#[command(
    name = "hawkes-adoption",
    version,
    about = "Simulate, fit and evaluate the competing-products Hawkes model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a stochastic Kronecker graph and write its edge list.
    SynthNet(SynthNetArgs),
    /// Draw random ground-truth parameters for every user of a network.
    GenParams(GenParamsArgs),
    /// Sample events from the model by thinning.
    Simulate(SimulateArgs),
    /// Fit per-user parameters on the training window, cross-validating (beta, omega).
    Fit(FitArgs),
    /// Score the fitted model and baselines on the test window.
    Evaluate(EvaluateArgs),
    /// Flag windows where held-out log-likelihood per event collapses.
    Detect(DetectArgs),
    /// Turn a mention log and a labeled usage log into indexed input files.
    Ingest(IngestArgs),
}

#[derive(Args)]
struct SynthNetArgs {
    /// Seed matrix row-major: t00,t01,t10,t11.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    theta: Vec<f64>,
    /// Kronecker power; the graph has 2^k nodes.
    #[arg(long)]
    k: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenParamsArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long, default_value_t = 2)]
    products: usize,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Share of users with a positive base rate.
    #[arg(long, default_value_t = 0.1)]
    baseline_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    params: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    start: f64,
    #[arg(long)]
    end: f64,
    /// Stop after this many events and mark the run truncated.
    #[arg(long)]
    max_events: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    events: PathBuf,
    /// Number of products; defaults to the event file header or the largest index seen.
    #[arg(long)]
    products: Option<usize>,
    /// Training window is [log start, train_end).
    #[arg(long)]
    train_end: Option<f64>,
    /// Test window is [train_end, test_end).
    #[arg(long)]
    test_end: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0, 10.0, 100.0])]
    beta_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0])]
    omega_grid: Vec<f64>,
    #[arg(long, default_value_t = 1e-10)]
    intensity_floor: f64,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-7)]
    tolerance: f64,
    /// `exact` integrates the clamped intensity; `affine` is the plain linear compensator.
    #[arg(long, value_enum, default_value_t = CompensatorArg::Affine)]
    compensator: CompensatorArg,
    /// Worker threads for the per-user fits (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the validation score of every grid point here.
    #[arg(long)]
    cv_report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompensatorArg {
    Affine,
    Exact,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Fitted parameters for the hawkes model.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Ground truth, for a parameter MSE row.
    #[arg(long)]
    true_params: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = ["hawkes".to_string(), "poisson".to_string(), "weibull".to_string(), "recency".to_string()])]
    models: Vec<String>,
    /// Recency memory in events.
    #[arg(long, default_value_t = hawkes_adoption::baselines::DEFAULT_MEMORY)]
    memory: usize,
    #[arg(long, default_value_t = 1e-10)]
    intensity_floor: f64,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    params: Option<PathBuf>,
    /// hawkes, poisson or weibull.
    #[arg(long, default_value = "hawkes")]
    model: String,
    #[arg(long)]
    window: f64,
    /// Drop below the running median, in nats per event.
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
    #[arg(long, default_value_t = 3)]
    min_history: usize,
    #[arg(long, default_value_t = 1e-10)]
    intensity_floor: f64,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// CSV `time,mentioner,mentioned`.
    #[arg(long)]
    mentions: PathBuf,
    /// CSV `time,user,product` with string ids.
    #[arg(long)]
    events: PathBuf,
    /// Record first-mention times so exposure only starts once an edge exists.
    #[arg(long)]
    gate_first_mention: bool,
    /// Keep only users with at least this many events.
    #[arg(long)]
    min_events: Option<usize>,
    /// Keep only events at or after this time.
    #[arg(long)]
    active_from: Option<f64>,
    /// Keep only events before this time.
    #[arg(long)]
    active_to: Option<f64>,
    #[arg(long)]
    out_network: PathBuf,
    #[arg(long)]
    out_events: PathBuf,
    #[arg(long)]
    out_users: PathBuf,
    #[arg(long)]
    out_products: PathBuf,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::SynthNet(a) => commands::synth_net(a),
        Command::GenParams(a) => commands::gen_params(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Detect(a) => commands::detect(a),
        Command::Ingest(a) => commands::ingest(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { fail::CONFIG } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
