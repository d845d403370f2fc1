//! Error type with a machine-readable code and a process exit status.

use bosonic_lindblad::fockspace::FockError;
use bosonic_lindblad::lowtemp::LowTempError;
use bosonic_lindblad::matkernel::KernelError;
use bosonic_lindblad::model::SpecError;
use bosonic_lindblad::qubitspeed::GridError;
use bosonic_lindblad::spectral::SpectralError;
use serde::Serialize;

/// Exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    /// Some validation check failed; exit 1.
    Validation,
    /// Bad or unreadable configuration, or an unwritable output path; exit 2.
    Config,
    /// A numerical precondition or solver failed; exit 3.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{code}: {message}")]
pub struct CliError {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Config,
            code,
            message: message.into(),
        }
    }

    pub fn numerical(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Numerical,
            code,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Validation,
            code: "validation.failed",
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.severity {
            Severity::Validation => 1,
            Severity::Config => 2,
            Severity::Numerical => 3,
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.code,
            "exit": self.exit_code(),
            "message": self.message,
        })
        .to_string()
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        Self::config("config.spec", e.to_string())
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        Self::config("config.time_grid", e.to_string())
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::NotStable(_) => Self::config("config.spec", e.to_string()),
            _ => Self::numerical("numeric.kernel", e.to_string()),
        }
    }
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        match e {
            FockError::Kernel(k) => k.into(),
            FockError::InsufficientMargin { .. } | FockError::BoundarySupport(_) => {
                Self::numerical("numeric.truncation_margin", e.to_string())
            }
            FockError::ModeMismatch { .. } | FockError::InvalidTruncation(_) | FockError::InvalidState(_) => {
                Self::config("config.invalid", e.to_string())
            }
            _ => Self::numerical("numeric.fock", e.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Spec(s) => s.into(),
            SpectralError::Kernel(k) => k.into(),
            SpectralError::Fock(f) => f.into(),
            SpectralError::ExceptionalPoint(_) => Self::numerical("numeric.exceptional_point", e.to_string()),
            SpectralError::TruncationLeakage(_) | SpectralError::UnsafeIndex { .. } => {
                Self::numerical("numeric.truncation_margin", e.to_string())
            }
            SpectralError::NotThermal => Self::config("config.spec", e.to_string()),
            SpectralError::Support(_) => Self::config("config.invalid", e.to_string()),
        }
    }
}

impl From<LowTempError> for CliError {
    fn from(e: LowTempError) -> Self {
        match e {
            LowTempError::Kernel(k) => k.into(),
            LowTempError::Fock(f) => f.into(),
            LowTempError::Margin { .. } => Self::numerical("numeric.truncation_margin", e.to_string()),
            LowTempError::NotThermal => Self::config("config.spec", e.to_string()),
            LowTempError::NegativeTime(_) => Self::config("config.time_grid", e.to_string()),
        }
    }
}
