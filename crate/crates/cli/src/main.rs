use std::path::PathBuf;
use std::process::ExitCode;

use bosonic_lindblad_cli::{execute, Command};
use clap::Parser;

/// Multimode bosonic Lindblad dynamics: spectra, evolution, speed and validation.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    command: Command,
    /// JSON job configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for randomized suites; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BOSONIC_LINDBLAD_LOG", "warn")).init();
    match execute(args.command, &args.config, &args.out, args.seed) {
        Ok(summary) => {
            for line in summary {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
