//! `wqed`: desk-scale workbench for a flux-tunable artificial atom used as a
//! microwave beam splitter and combiner.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod manifest;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{combine, fit, spectrum, switch, synth, Context};
use crate::config::{DeviceConfig, CONFIG_ENV};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "wqed", version, about, propagate_version = true)]
struct Cli {
    /// Device config (TOML). The built-in reference device is used when unset.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// T, R and T+R while the qubit is tuned across a fixed probe.
    Spectrum(spectrum::Args),
    /// Time-domain switching under a Gaussian-square flux pulse.
    Switch(switch::Args),
    /// Two-input interference fringes versus the phase of V1.
    Combine(combine::Args),
    /// Parameter extraction from measured or synthetic data.
    #[command(subcommand)]
    Fit(fit::FitCommand),
    /// Seeded synthetic datasets in the formats `fit` reads.
    #[command(subcommand)]
    Synth(synth::SynthCommand),
    /// Print the effective device config as TOML.
    Config,
}

fn run(cli: Cli) -> CliResult<()> {
    let config = DeviceConfig::load(cli.config.as_deref())?;
    if let Command::Config = cli.command {
        print!("{}", config.to_toml());
        return Ok(());
    }
    let ctx = Context::new(config);
    match cli.command {
        Command::Spectrum(a) => spectrum::run(&ctx, &a),
        Command::Switch(a) => switch::run(&ctx, &a),
        Command::Combine(a) => combine::run(&ctx, &a),
        Command::Fit(c) => fit::run(&ctx, &c),
        Command::Synth(c) => synth::run(&ctx, &c),
        Command::Config => unreachable!(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wqed: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
