use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use vibro_cli::{execute, parse_config, Command, Failure, Format, OUT_DIR_ENV};

/// Forced impact oscillator with Coulomb friction: simulation, periodic orbits,
/// diagnostics and interval certification.
#[derive(Debug, Parser)]
#[command(name = "vibro", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set params.friction=0.45`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for grid computations.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> anyhow::Result<PathBuf> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
            .context("reading configuration")?,
        None => String::new(),
    };
    let mut overrides = cli.overrides.clone();
    if let Some(out) = &cli.out {
        overrides.push(format!("out={:?}", out.display().to_string()));
    }
    if let Some(format) = cli.format {
        overrides.push(format!("format={:?}", format.extension()));
    }
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(threads) = cli.threads {
        overrides.push(format!("threads={threads}"));
    }
    let cfg = parse_config(&text, &overrides)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    let out_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    Ok(execute(cli.command, &cfg, out_dir.as_deref())?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            let failure = err
                .downcast_ref::<Failure>()
                .cloned()
                .unwrap_or_else(|| Failure::Internal(format!("{err:#}")));
            eprintln!("{}", failure.report());
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
