pub mod combine;
pub mod fit;
pub mod spectrum;
pub mod switch;
pub mod synth;

use std::path::PathBuf;

use crate::config::DeviceConfig;
use crate::error::{CliError, CliResult};

pub struct Context {
    pub config: DeviceConfig,
    pub config_hash: String,
}

impl Context {
    pub fn new(config: DeviceConfig) -> Self {
        let config_hash = config.hash();
        Self { config, config_hash }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct Output {
    /// Destination file (written atomically, with a `.manifest.json`
    /// sidecar). Standard output when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn require_finite(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--{name} must be finite")))
    }
}

/// `n` evenly spaced values over `[lo, hi]`; a single point sits at `lo`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
