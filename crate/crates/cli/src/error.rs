use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use nhph_core::ed::EdError;
use nhph_core::itebd::ItebdError;
use nhph_core::mps::MpsError;
use nhph_core::parent::ParentError;

/// Failures mapped onto the stable exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2.
    SingularMetric(String),
    /// Exit 3.
    ResourceCap(String),
    /// Exit 4, after partial outputs are written.
    NotConverged(String),
    /// Exit 1.
    Other(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Other(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::SingularMetric(_) => 2,
            CliError::ResourceCap(_) => 3,
            CliError::NotConverged(_) => 4,
            CliError::Other(_) => 1,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::SingularMetric(m) => write!(f, "no nH-PH at this k: {m}"),
            CliError::ResourceCap(m) => write!(f, "resource cap exceeded: {m}"),
            CliError::NotConverged(m) => write!(f, "not converged: {m}"),
            CliError::Other(m) => f.write_str(m),
        }
    }
}

impl From<MpsError> for CliError {
    fn from(e: MpsError) -> Self {
        match e {
            MpsError::SizeCap { .. } => CliError::ResourceCap(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<ParentError> for CliError {
    fn from(e: ParentError) -> Self {
        match e {
            ParentError::NoParentHamiltonian { .. } => CliError::SingularMetric(e.to_string()),
            ParentError::Mps(m) => m.into(),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<EdError> for CliError {
    fn from(e: EdError) -> Self {
        match e {
            EdError::SizeCap { .. } => CliError::ResourceCap(e.to_string()),
            EdError::Parent(p) => p.into(),
            EdError::Mps(m) => m.into(),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<ItebdError> for CliError {
    fn from(e: ItebdError) -> Self {
        match e {
            ItebdError::Parent(p) => p.into(),
            ItebdError::Mps(m) => m.into(),
            other => CliError::Other(other.to_string()),
        }
    }
}
