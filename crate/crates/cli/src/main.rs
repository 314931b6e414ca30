use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dynamo_cli::{execute, parse_config, RunError};
use log::error;

/// Spectral solver for the mean-field dynamo in a three-zone spherical shell.
#[derive(Debug, Parser)]
#[command(name = "dynamo", version)]
struct Args {
    /// Configuration file (TOML).
    config: Option<PathBuf>,
    /// Output directory; overrides `output.directory`.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set physics.r_m=1000`.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Continue from a snapshot up to `time.steps`, appending to the tables.
    #[arg(long, value_name = "SNAPSHOT")]
    resume: Option<PathBuf>,
    /// Validate the configuration and write the manifest only.
    #[arg(long)]
    dry_run: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                error!("cannot read {}: {e}", path.display());
                return ExitCode::from(RunError::EXIT_IO as u8);
            }
        },
        None => String::new(),
    };
    let mut config = match parse_config(&text, &args.overrides) {
        Ok(c) => c,
        Err(e) => {
            error!("configuration error: {e}");
            return ExitCode::from(RunError::EXIT_CONFIG as u8);
        }
    };
    if let Some(dir) = args.output {
        config.output.directory = dir;
    }
    match execute(&config, args.resume.as_deref(), args.dry_run) {
        Ok(summary) => {
            if let Some(rec) = summary.last_record {
                println!("step {} time {:.6e} energy {:.6e}", rec.step, rec.time, rec.energy);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
