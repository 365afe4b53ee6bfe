use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use ocsm_lab::{execute_run, execute_sweep, execute_verify, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "ocsm-lab",
    about = "Projection-free online DR-submodular maximization experiments"
)]
struct Cli {
    /// Worker threads for the run matrix (env fallback: OCSM_LAB_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the configured runs and write CSV/JSON artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the config's seed list, e.g. --seeds 0,1,2
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Run every horizon and fit the log-log regret slope.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Run the oracle/boosting/network property suites.
    Verify {
        #[arg(long, default_value_t = 17)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn threads_from(cli: &Cli) -> Option<usize> {
    cli.threads.or_else(|| {
        std::env::var("OCSM_LAB_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn load_config(path: &PathBuf, seeds: Option<Vec<u64>>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seeds) = seeds {
        cfg.seeds = seeds;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(
        if cli.verbose { "info" } else { "warn" },
    ))
    .init();
    let threads = threads_from(&cli);
    match &cli.command {
        Command::Run { config, out, seeds } => {
            let cfg = load_config(config, seeds.clone())?;
            let artifacts = execute_run(&cfg, out, threads)?;
            println!(
                "wrote {} CSV files and summary.json to {}",
                artifacts.csv_paths.len(),
                out.display()
            );
            Ok(artifacts.all_ok)
        }
        Command::Sweep { config, out, seeds } => {
            let cfg = load_config(config, seeds.clone())?;
            let artifacts = execute_sweep(&cfg, out, threads)?;
            println!(
                "wrote {} CSV files and summary.json to {}",
                artifacts.csv_paths.len(),
                out.display()
            );
            Ok(artifacts.all_ok)
        }
        Command::Verify { seed, out } => {
            let (report, ok) = execute_verify(*seed, out.as_deref())?;
            print!("{report}");
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
