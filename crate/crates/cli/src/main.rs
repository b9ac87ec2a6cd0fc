use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use laguerre_cli::config::{Mode, RunConfig};
use laguerre_cli::run::{execute, Overrides};
use laguerre_cli::CliError;

/// Laguerre tessellations with prescribed cell volumes.
#[derive(Parser)]
#[command(name = "laguerre", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample seeds, fit weights, and regularize with Lloyd steps.
    Generate(CommonArgs),
    /// Fit weights to target volumes for fixed seed positions.
    Fit(CommonArgs),
    /// Compute one diagram from explicit seeds and weights.
    Diagram(CommonArgs),
    /// Summarize volume and centroid errors of an existing diagram.
    Report(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured rng seed.
    #[arg(long)]
    rng_seed: Option<u64>,
    /// Worker threads; beats LAGUERRE_THREADS. Defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Write artifacts here instead of the configured directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (mode, args) = match &cli.command {
        Command::Generate(a) => (Mode::Generate, a),
        Command::Fit(a) => (Mode::Fit, a),
        Command::Diagram(a) => (Mode::Diagram, a),
        Command::Report(a) => (Mode::Report, a),
    };

    configure_threads(args.threads)?;

    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Config(format!("config file {} not found", args.config.display()))
        } else {
            CliError::Io(e.to_string())
        }
    })?;
    let config = RunConfig::from_toml(&text)?;
    if config.mode != mode {
        return Err(CliError::Config(format!(
            "config declares mode \"{}\" but the \"{mode}\" subcommand was invoked",
            config.mode
        )));
    }

    let overrides = Overrides {
        rng_seed: args.rng_seed,
        output_dir: args.output_dir.clone(),
    };
    execute(&config, &overrides)
}

/// Flag beats environment; an unparseable environment value is a config
/// error rather than something to silently ignore.
fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var("LAGUERRE_THREADS") {
            Ok(s) => Some(s.parse::<usize>().map_err(|_| {
                CliError::Config(format!("LAGUERRE_THREADS is not a thread count: {s:?}"))
            })?),
            Err(_) => None,
        },
    };
    let Some(threads) = threads else {
        return Ok(());
    };
    if threads == 0 {
        return Err(CliError::Config("thread count must be at least 1".to_string()));
    }
    #[cfg(feature = "parallel")]
    {
        // A second build_global is fine in-process (tests); the pool from
        // the first call wins.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    Ok(())
}
