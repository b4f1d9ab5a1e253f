use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use beurling_cli::config::{Experiment, ExperimentConfig};
use beurling_cli::{run_experiment, CliError};

/// Runs a generalized-prime experiment and writes hashed, reproducible outputs.
#[derive(Parser, Debug)]
#[command(name = "beurling", version)]
struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; falls back to the config, then BEURLING_OUT_DIR.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Size of the worker pool.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

fn out_dir(args: &Args, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = &args.out {
        return dir.clone();
    }
    if let Some(dir) = &cfg.output {
        return dir.into();
    }
    if let Some(dir) = std::env::var_os("BEURLING_OUT_DIR") {
        return dir.into();
    }
    PathBuf::from("out").join(args.experiment.name().to_lowercase())
}

fn main_inner(args: &Args) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    let dir = out_dir(args, &cfg);
    let start = Instant::now();
    let (hash, outcome) = run_experiment(args.experiment, &cfg, &dir)?;
    println!("{}", serde_json::to_string_pretty(&outcome.summary).unwrap_or_default());
    println!("output {} sha256 {hash}", dir.display());
    eprintln!("{} finished in {:.2?}", args.experiment.name(), start.elapsed());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match main_inner(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
