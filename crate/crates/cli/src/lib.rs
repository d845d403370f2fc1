//! Command-line front end for the bosonic-lindblad library: job configs,
//! CSV and SVG export, and the validation report.

pub mod config;
pub mod error;
pub mod jobs;
pub mod plot;
pub mod table;

use std::path::Path;

pub use config::{Command, JobConfig, DEFAULT_SEED};
pub use error::CliError;
pub use jobs::{Artifact, JobOutput};

/// Writes artifacts one after another under `out_dir`.
pub fn write_artifacts(out_dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    let io = |e: std::io::Error, p: &Path| CliError::config("io.write", format!("{}: {e}", p.display()));
    std::fs::create_dir_all(out_dir).map_err(|e| io(e, out_dir))?;
    for a in artifacts {
        let path = out_dir.join(&a.name);
        std::fs::write(&path, &a.bytes).map_err(|e| io(e, &path))?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

/// Loads the config, runs the command and writes its artifacts. Artifacts
/// are written even when the job reports a failed check.
pub fn execute(command: Command, config: &Path, out_dir: &Path, seed: Option<u64>) -> Result<Vec<String>, CliError> {
    let cfg = JobConfig::load(config)?;
    let seed = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let output = jobs::run(command, &cfg, seed)?;
    write_artifacts(out_dir, &output.artifacts)?;
    match output.failure {
        Some(e) => {
            for line in &output.summary {
                println!("{line}");
            }
            Err(e)
        }
        None => Ok(output.summary),
    }
}
