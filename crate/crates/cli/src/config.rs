//! Job configuration read from JSON.

use std::path::Path;

use bosonic_lindblad::model::SpecConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    SteadyState,
    Evolve,
    Speed,
    EpScan,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::SteadyState => "steady-state",
            Self::Evolve => "evolve",
            Self::Speed => "speed",
            Self::EpScan => "ep-scan",
            Self::Validate => "validate",
        }
    }

    /// Commands that build a truncated Fock-space oracle.
    fn needs_oracle(self) -> bool {
        matches!(self, Self::SteadyState | Self::Evolve)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// `steps + 1` equally spaced times from 0 to `t_max`.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.t_max * k as f64 / self.steps as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitConfig {
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
}

/// Optional file names, resolved against the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<String>,
    pub svg: Option<String>,
    pub json: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotConfig {
    #[serde(default)]
    pub log_scale: bool,
}

/// Frequency range of an EP scan; `omega_max` defaults to `3 |gamma|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub omega_max: Option<f64>,
    pub points: usize,
}

/// Speed surface over time and polar angle at `phi = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub theta_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    /// When present it must agree with the command given on the command line.
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub spec: Option<SpecConfig>,
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub time_grid: Option<TimeGrid>,
    #[serde(rename = "n_T", default)]
    pub n_thermal: Vec<f64>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub qubit: Option<QubitConfig>,
    #[serde(default)]
    pub plot: PlotConfig,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub surface: Option<SurfaceConfig>,
    /// Photon cap per side for the analytic spectrum.
    #[serde(default)]
    pub max_photons: Option<usize>,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

impl JobConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config("config.parse", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config.read", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Structural checks that do not need any numerics.
    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(CliError::config(
                    "config.command",
                    format!("config is for `{}` but `{}` was requested", c.name(), command.name()),
                ));
            }
        }
        if let Some(g) = self.time_grid {
            if g.steps < 2 {
                return Err(CliError::config("config.time_grid", format!("steps must be >= 2, got {}", g.steps)));
            }
            if !(g.t_max > 0.0 && g.t_max.is_finite()) {
                return Err(CliError::config("config.time_grid", format!("t_max must be > 0, got {}", g.t_max)));
            }
        }
        if command.needs_oracle() {
            match self.cutoff {
                Some(c) if c >= 4 => {}
                Some(c) => return Err(CliError::config("config.cutoff", format!("cutoff must be >= 4, got {c}"))),
                None => return Err(CliError::config("config.cutoff", "this command needs a cutoff")),
            }
        }
        if let Some(c) = self.cutoff {
            if command == Command::Spectrum && c < 4 {
                return Err(CliError::config("config.cutoff", format!("cutoff must be >= 4, got {c}")));
            }
        }
        if let Some(&n) = self.n_thermal.iter().find(|n| !(**n >= 0.0 && n.is_finite())) {
            return Err(CliError::config("config.n_T", format!("n_T must be finite and >= 0, got {n}")));
        }
        if command != Command::Validate && self.spec.is_none() {
            return Err(CliError::config("config.spec", "this command needs a spec"));
        }
        Ok(())
    }

    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        self.time_grid.ok_or_else(|| CliError::config("config.time_grid", "this command needs a time grid"))
    }

    pub fn spec_config(&self) -> Result<&SpecConfig, CliError> {
        self.spec.as_ref().ok_or_else(|| CliError::config("config.spec", "this command needs a spec"))
    }
}
