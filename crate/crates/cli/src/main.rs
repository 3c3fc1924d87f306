mod commands;
mod manifest;
mod plots;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use marginlab::mlp::{Batch, BetaSchedule};

use crate::commands::Outcome;
use crate::manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "marginlab", version, about = "Perceptron margin experiments")]
struct Cli {
    /// Seed for every randomized command.
    #[arg(long, env = "MARGINLAB_SEED", default_value_t = 0, global = true)]
    seed: u64,

    /// JSON-lines file that receives one manifest per run.
    #[arg(long, env = "MARGINLAB_MANIFEST", default_value = "marginlab-runs.jsonl", global = true)]
    manifest: PathBuf,

    #[arg(long, global = true)]
    no_manifest: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a perceptron variant and check its guarantees.
    Train(TrainArgs),
    /// Certify the optimal margin of a dataset.
    Oracle(OracleArgs),
    /// Sparse hyperplane or proximity witness for two point sets.
    Separate(SeparateArgs),
    /// Perceptron strategies for the point/hyperplane game.
    Game(GameArgs),
    /// Gaussian random projection of a dataset.
    Project(ProjectArgs),
    /// Count the eps-partitions of a point set.
    Census(CensusArgs),
    /// Check that random projection preserves eps-partitions.
    Dimred(DimredArgs),
    /// Compression generalization experiment.
    Genexp(GenexpArgs),
    /// Train the beta-scheduled hinge-loss network on MNIST.
    Mlp(MlpArgs),
    /// Update counts of the infinity-perceptron on the two-point family.
    Sharpness(SharpnessArgs),
    /// Run the acceptance criteria and print a pass/fail table.
    VerifyAll(VerifyArgs),
    /// Turn reports into CSV series for plotting.
    Plots(PlotsArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Train(_) => "train",
            Command::Oracle(_) => "oracle",
            Command::Separate(_) => "separate",
            Command::Game(_) => "game",
            Command::Project(_) => "project",
            Command::Census(_) => "census",
            Command::Dimred(_) => "dimred",
            Command::Genexp(_) => "genexp",
            Command::Mlp(_) => "mlp",
            Command::Sharpness(_) => "sharpness",
            Command::VerifyAll(_) => "verify-all",
            Command::Plots(_) => "plots",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Algo {
    Classic,
    Beta,
    #[value(name = "r-indep")]
    RIndep,
    Inf,
    Combined,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scan {
    Cyclic,
    First,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    /// Threshold of the beta variant.
    #[arg(long)]
    beta: Option<f64>,
    /// Exponent in (1, 2) of the inf and combined variants.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    data: PathBuf,
    /// Defaults to 10x the update bound for the certified margin.
    #[arg(long)]
    max_updates: Option<usize>,
    #[arg(long, value_enum, default_value = "cyclic")]
    scan: Scan,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the update trace as t,i,beta rows.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    data: PathBuf,
    /// Duality-gap tolerance; defaults to 1e-9 max(1, R).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SeparateArgs {
    #[arg(long)]
    k: PathBuf,
    #[arg(long)]
    l: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GameArgs {
    #[arg(long)]
    v: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    tmax: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProjectArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the projected dataset as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CensusArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DimredArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long = "C", default_value_t = marginlab::projection::DEFAULT_C)]
    c: f64,
    #[arg(long)]
    trials: u64,
    /// Sample this many labelings instead of enumerating all of them.
    #[arg(long)]
    sampled: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Dist {
    Planted,
}

#[derive(Debug, Args)]
struct GenexpArgs {
    #[arg(long, value_enum, default_value = "planted")]
    dist: Dist,
    #[arg(long)]
    eps: f64,
    /// Margin of the planted distribution; defaults to eps.
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long, default_value_t = 5)]
    dim: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    trials: usize,
    #[arg(long, default_value_t = 100_000)]
    test_size: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MlpArgs {
    /// Directory holding the four standard MNIST files.
    #[arg(long, env = "MARGINLAB_MNIST_DIR")]
    mnist_dir: Option<PathBuf>,
    #[arg(long)]
    train_images: Option<PathBuf>,
    #[arg(long)]
    train_labels: Option<PathBuf>,
    #[arg(long)]
    test_images: Option<PathBuf>,
    #[arg(long)]
    test_labels: Option<PathBuf>,
    /// Hidden width; 0 connects the inputs straight to the outputs.
    #[arg(long, default_value_t = 300)]
    hidden: usize,
    #[arg(long, default_value = "power:0.75")]
    schedule: BetaSchedule,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long)]
    hidden_lr: Option<f64>,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value = "fixed:32")]
    batch: Batch,
    /// Share one clock between all neurons of a layer.
    #[arg(long)]
    global_clock: bool,
    #[arg(long)]
    no_shuffle: bool,
    /// Use only the first N training images.
    #[arg(long)]
    train_limit: Option<usize>,
    #[arg(long)]
    test_limit: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SharpnessArgs {
    #[arg(long, default_value_t = 1.9)]
    alpha: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05])]
    eps: Vec<f64>,
    /// Also simulate when the closed-form count is at most this.
    #[arg(long, default_value_t = 10_000_000)]
    simulate_up_to: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Every criterion except MNIST (the default).
    #[arg(long, conflicts_with = "full")]
    quick: bool,
    /// Every criterion including MNIST.
    #[arg(long)]
    full: bool,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
    #[arg(long, env = "MARGINLAB_MNIST_DIR")]
    mnist_dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotsArgs {
    /// JSON reports written by other subcommands.
    reports: Vec<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let started = Instant::now();
    let name = cli.command.name();
    let seed = cli.seed;
    let result = run(&cli.command, seed);
    let (code, outcome) = match result {
        Ok(outcome) => (if outcome.failed.is_empty() { 0 } else { 1 }, Some(outcome)),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            (2, None)
        }
    };
    if !cli.no_manifest {
        let m = RunManifest::new(name, seed, started.elapsed().as_secs_f64(), code, outcome.as_ref());
        if let Err(e) = m.append(&cli.manifest) {
            eprintln!("warning: could not append manifest to {}: {e:#}", cli.manifest.display());
        }
    }
    ExitCode::from(code)
}

fn run(command: &Command, seed: u64) -> anyhow::Result<Outcome> {
    let mut outcome = match command {
        Command::Train(a) => commands::train(a)?,
        Command::Oracle(a) => commands::oracle(a)?,
        Command::Separate(a) => commands::separate(a)?,
        Command::Game(a) => commands::game(a)?,
        Command::Project(a) => commands::project(a, seed)?,
        Command::Census(a) => commands::census(a)?,
        Command::Dimred(a) => commands::dimred(a, seed)?,
        Command::Genexp(a) => commands::genexp(a, seed)?,
        Command::Mlp(a) => commands::mlp(a, seed)?,
        Command::Sharpness(a) => commands::sharpness(a)?,
        Command::VerifyAll(a) => commands::verify_all(a, seed)?,
        Command::Plots(a) => plots::emit(a)?,
    };
    outcome.emit(command.name())?;
    Ok(outcome)
}

/// The error chain, skipping causes already spelled out by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !text.contains(&msg) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&msg);
        }
    }
    text
}
