mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "dative", version, about = "Dative alternation corpus surgery and evaluation")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Io {
    /// Input CoNLL-U treebank.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write dative instances as JSON lines.
    Detect(commands::DetectArgs),
    /// Split a treebank into dative, ambiguous and non-dative id lists.
    Partition(commands::PartitionArgs),
    /// Write every detected dative next to its alternant.
    Alternate(commands::AlternateArgs),
    /// Build a training corpus for one condition.
    Surgery(commands::SurgeryArgs),
    /// Re-linearize trees by constituent length.
    Linearize(commands::LinearizeArgs),
    /// Short-first and long-first statistics of a treebank.
    OrderReport(commands::OrderReportArgs),
    /// Build the evaluation pair set.
    Pairs(commands::PairsArgs),
    /// Score pairs with a log-probability backend.
    Score(commands::ScoreArgs),
    /// Correlations and regressions over scored records.
    Report(commands::ReportArgs),
    /// Generate a synthetic treebank.
    Synth(commands::SynthArgs),
}

pub enum Outcome {
    Complete,
    Partial,
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.workers.or(cfg.workers) {
        if n == 0 {
            return Err(config::config_error("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Detect(a) => commands::detect(a, &cfg),
        Command::Partition(a) => commands::partition(a, &cfg),
        Command::Alternate(a) => commands::alternate(a, &cfg),
        Command::Surgery(a) => commands::surgery(a, &cfg),
        Command::Linearize(a) => commands::linearize(a, &cfg),
        Command::OrderReport(a) => commands::order_report(a, &cfg),
        Command::Pairs(a) => commands::pairs(a, &cfg),
        Command::Score(a) => commands::score(a, &cfg),
        Command::Report(a) => commands::report(a, &cfg),
        Command::Synth(a) => commands::synth(a, &cfg),
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
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(1),
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
