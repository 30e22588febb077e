use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rig_lab::config::{ExperimentConfig, ExperimentKind};
use rig_lab::csv;
use rig_lab::error::{AppError, Result};
use rig_lab::runner;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "rig-lab",
    version,
    about = "Kernel complexity profiles, posterior bound coverage and excess-risk rate sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Effective dimension, information gains and their upper bounds over n_grid
    Complexity(RunArgs),
    /// Bound versus realized risk over repeated noise draws at a fixed design
    Coverage(RunArgs),
    /// Mean excess risk and bound value as n grows, with schedule-tied alpha
    Rates(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Write the CSV here instead of the config's output_path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's master_seed
    #[arg(long)]
    seed: Option<u64>,
    /// Number of worker threads (default: detected parallelism)
    #[arg(long)]
    threads: Option<usize>,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is a
            // configuration mistake.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{err}");
            err.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let (kind, args) = match cli.command {
        Command::Complexity(a) => (ExperimentKind::Complexity, a),
        Command::Coverage(a) => (ExperimentKind::Coverage, a),
        Command::Rates(a) => (ExperimentKind::Rates, a),
    };
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cfg.experiment != kind {
        return Err(AppError::config(format!(
            "config declares experiment '{}' but the '{}' subcommand was invoked",
            cfg.experiment.name(),
            kind.name()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output_path = out.display().to_string();
    }
    if let Some(threads) = args.threads {
        if threads == 0 {
            return Err(AppError::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| AppError::config(format!("cannot configure {threads} worker threads: {e}")))?;
    }

    let output = runner::run(&cfg)?;
    csv::write_file(Path::new(&cfg.output_path), &output.csv)?;
    for note in &output.notes {
        eprintln!("{note}");
    }
    eprintln!("wrote {} rows to {}", output.rows, cfg.output_path);
    Ok(())
}
