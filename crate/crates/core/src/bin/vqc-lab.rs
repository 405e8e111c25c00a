use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vqc_typicality::experiments::{emit_outputs, run, ExperimentConfig, ExperimentKind, OutputFormat};
use vqc_typicality::Error;

/// Concentration, gradient and design experiments for variational quantum circuits.
#[derive(Parser)]
#[command(name = "vqc-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Output variance over datasets of growing size for the three model families.
    Fig4(Flags),
    /// Mean and variance of outputs over parameter draws.
    Concentration(Flags),
    /// Exceedance frequencies of outputs around the Haar mean.
    Tail(Flags),
    /// Max pairwise output spread over a finite dataset.
    Spread(Flags),
    /// Gradient statistics and generator checks.
    Gradients(Flags),
    /// Frame potential, second-moment distance and Choi purity.
    Design(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML file with flat keys overriding the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, json or svg.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn execute(kind: ExperimentKind, flags: Flags) -> Result<Vec<PathBuf>, Error> {
    let mut config = match &flags.config {
        Some(path) => ExperimentConfig::load(path, Some(kind))?,
        None => ExperimentConfig::defaults(kind),
    };
    if let Some(seed) = flags.seed {
        config.master_seed = seed;
    }
    if let Some(out) = &flags.out {
        config.out_dir = out.to_string_lossy().into_owned();
    }
    if let Some(format) = &flags.format {
        config.format = format.parse::<OutputFormat>()?;
    }
    config.validate()?;
    if let Some(jobs) = flags.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let table = run(&config)?;
    emit_outputs(&table, config.format, PathBuf::from(&config.out_dir).as_path())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, flags) = match cli.command {
        Command::Fig4(f) => (ExperimentKind::Fig4, f),
        Command::Concentration(f) => (ExperimentKind::Concentration, f),
        Command::Tail(f) => (ExperimentKind::Tail, f),
        Command::Spread(f) => (ExperimentKind::Spread, f),
        Command::Gradients(f) => (ExperimentKind::Gradients, f),
        Command::Design(f) => (ExperimentKind::Design, f),
    };
    match execute(kind, flags) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("vqc-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
