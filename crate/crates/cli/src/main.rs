//! Command-line interface for the spin-squeezing simulator.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error,
//! 3 numerical failure, 4 resource limit.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use softsqueeze_cli::commands;
use softsqueeze_cli::config::RunConfig;

#[derive(Parser)]
#[command(name = "softsqueeze", version, about = "Spin-squeezing simulator for soft-core interactions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured simulation; write timeseries CSV and summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (default: machine parallelism; env
        /// SOFTSQUEEZE_WORKERS overrides the default).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: config output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep with a resumable cell journal.
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip cells already recorded in the journal.
        #[arg(long)]
        resume: bool,
    },
    /// Compare the trajectory engine against the exact reference.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert physical dressing parameters into simulation inputs.
    Plan {
        #[arg(long)]
        species: String,
        #[arg(long)]
        f: f64,
        #[arg(long)]
        omega_hz: Option<f64>,
        #[arg(long)]
        r_b: Option<f64>,
        /// Lattice for the interaction aggregates, e.g. "14x14".
        #[arg(long, default_value = "14x14")]
        lattice: String,
        /// Write a parameter-overlay CSV with this file name.
        #[arg(long)]
        overlay: Option<String>,
        /// Blockade-radius grid for the overlay, start:stop:step.
        #[arg(long, default_value = "1.0:6.0:0.25")]
        r_b_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<softsqueeze::Error>() {
            return softsqueeze_cli::exit::classify_core(e);
        }
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 1;
        }
    }
    1
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct ConfigError(String);

fn load_config(path: &PathBuf) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!(e).context(format!("reading config {}", path.display())))?;
    RunConfig::from_str(&text).map_err(|msg| ConfigError(msg).into())
}

fn resolve_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("SOFTSQUEEZE_WORKERS").ok().and_then(|v| v.parse().ok())
    })
    .unwrap_or(0) // 0: rayon picks machine parallelism
}

fn with_workers<T>(workers: usize, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    if workers == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("building worker pool")
        .install(f)
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate { config, workers, seed, out } => {
            let cfg = load_config(&config)?;
            let out_dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
            let workers = resolve_workers(workers);
            with_workers(workers, || {
                commands::simulate::execute(&cfg, seed, &out_dir, workers)
            })
        }
        Command::Scan { config, workers, seed, out, resume } => {
            let cfg = load_config(&config)?;
            let out_dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
            with_workers(resolve_workers(workers), || {
                commands::scan::execute(&cfg, seed, &out_dir, resume)
            })
        }
        Command::Benchmark { config, workers, seed, out } => {
            let cfg = load_config(&config)?;
            let out_dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
            let workers = resolve_workers(workers);
            with_workers(workers, || commands::benchmark::execute(&cfg, seed, &out_dir, workers))
        }
        Command::Plan { species, f, omega_hz, r_b, lattice, overlay, r_b_grid, out } => {
            let out_dir = out.unwrap_or_else(|| PathBuf::from("out"));
            commands::plan::execute(
                &commands::plan::PlanArgs { species, f, omega_hz, r_b, lattice, overlay, r_b_grid },
                &out_dir,
            )
        }
    }
}
