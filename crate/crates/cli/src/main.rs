use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use collapse_lab::commands;

/// Unconstrained feature model lab: train, certify and measure neural collapse.
#[derive(Debug, Parser)]
#[command(name = "collapse-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train from a run config; writes a trace CSV and a checkpoint, prints a summary.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Directory for trace.csv and checkpoint.json (overrides the config's output block).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Certify a checkpoint; exit 0 only for a certified global minimum.
    Certify {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Run config supplying the dimensions, penalties and loss.
        #[arg(long)]
        config: PathBuf,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal ρ, objective value and logit margin of the ETF family.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// NC1-NC4 for a feature dump (`label,f0,…` CSV) and a classifier JSON.
    Metrics {
        #[arg(long)]
        features: PathBuf,
        /// Checkpoint-format JSON; `H` may be omitted.
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized property suite: dpr1, zstructure, nuclear, contrastive, hessian-psd or all.
    Lemma {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid of training runs; one trace per cell plus sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the sweep's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Concurrent cells; defaults to the available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Finite-difference gradient check on 10 random states per loss family.
    GradCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COLLAPSE_LAB_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train { config, out, seed } => commands::train(config, out.as_deref(), *seed),
        Command::Certify { checkpoint, config, out } => commands::certify(checkpoint, config, out.as_deref()),
        Command::Oracle { config, out } => commands::oracle(config, out.as_deref()),
        Command::Metrics {
            features,
            checkpoint,
            out,
        } => commands::metrics(features, checkpoint, out.as_deref()),
        Command::Lemma { suite, seed, out } => commands::lemma(suite, *seed, out.as_deref()),
        Command::Sweep { config, out, jobs, seed } => commands::sweep(config, out.as_deref(), *jobs, *seed),
        Command::GradCheck { config, seed, out } => commands::grad_check(config, *seed, out.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
