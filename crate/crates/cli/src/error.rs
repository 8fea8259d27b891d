use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] wqed_core::Error),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error: {path}: line {line}: {message}")]
    Parse { path: String, line: u64, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub mod exit {
    pub const IO: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const DOMAIN: u8 = 3;
    pub const FIT: u8 = 4;
    pub const PARSE: u8 = 5;
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use wqed_core::Error as E;
        match self {
            CliError::Core(E::Usage(_)) | CliError::Usage(_) => exit::USAGE,
            CliError::Core(E::Domain(_) | E::DegenerateReference(_) | E::CalibrationInconsistent(_)) => {
                exit::DOMAIN
            }
            CliError::Core(E::DegenerateGeometry(_) | E::FitFailure(_)) => exit::FIT,
            CliError::Parse { .. } | CliError::Config(_) => exit::PARSE,
            CliError::Io { .. } => exit::IO,
        }
    }

    /// Short machine-readable category used in failure reports.
    pub fn kind(&self) -> &'static str {
        use wqed_core::Error as E;
        match self {
            CliError::Core(E::Usage(_)) | CliError::Usage(_) => "usage",
            CliError::Core(E::Domain(_)) => "domain",
            CliError::Core(E::DegenerateReference(_)) => "degenerate_reference",
            CliError::Core(E::CalibrationInconsistent(_)) => "calibration_inconsistent",
            CliError::Core(E::DegenerateGeometry(_)) => "degenerate_geometry",
            CliError::Core(E::FitFailure(_)) => "fit_failure",
            CliError::Parse { .. } => "parse",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    pub fn parse(path: &Path, line: u64, message: impl Into<String>) -> Self {
        CliError::Parse { path: path.display().to_string(), line, message: message.into() }
    }
}
