use serde::Serialize;
use wqed_core::estimation::synth::{calibration_records, saturation_curve, weak_probe_trace};

use super::{require_finite, usage, Context, Output};
use crate::error::CliResult;
use crate::manifest::{emit, RunManifest};
use crate::table::CsvBuilder;

const NS: f64 = 1e-9;
const NV: f64 = 1e-9;

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct Noise {
    /// Gaussian noise σ per quadrature (calibrate: nV).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, clap::Subcommand)]
pub enum SynthCommand {
    /// Weak-probe transmission around resonance, for `fit circle`.
    Circle {
        #[arg(long, default_value_t = 16001)]
        points: usize,
        /// Half-span in units of γ.
        #[arg(long, default_value_t = 3.0)]
        span: f64,
        #[command(flatten)]
        noise: Noise,
        #[command(flatten)]
        output: Output,
    },
    /// Resonant |t| on a log power grid, for `fit saturation`.
    Saturation {
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// Decades either side of the half-saturation power.
        #[arg(long, default_value_t = 2.0)]
        decades: f64,
        #[command(flatten)]
        noise: Noise,
        #[command(flatten)]
        output: Output,
    },
    /// On/off-resonance transmitted-voltage records, for `fit calibrate`.
    Calibrate {
        /// On-chip probe power, W. Defaults to the config's probe power.
        #[arg(long)]
        power: Option<f64>,
        /// Record length, ns.
        #[arg(long, default_value_t = 200.0)]
        duration: f64,
        #[command(flatten)]
        noise: Noise,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ManifestArgs<'a> {
    Circle { points: usize, span: f64, noise: &'a Noise },
    Saturation { points: usize, decades: f64, noise: &'a Noise },
    Calibrate { power: f64, duration: f64, noise: &'a Noise },
}

pub fn run(ctx: &Context, cmd: &SynthCommand) -> CliResult<()> {
    let params = ctx.config.qubit_params()?;
    let (out, body) = match cmd {
        SynthCommand::Circle { points, span, noise, output } => {
            check(noise)?;
            require_finite("span", *span)?;
            let m = RunManifest::new(
                "synth-circle",
                &ctx.config_hash,
                Some(noise.seed),
                &ManifestArgs::Circle { points: *points, span: *span, noise },
            );
            let t = weak_probe_trace(&params, *span, *points, noise.noise, noise.seed)?;
            let mut csv = CsvBuilder::new(&m, &["freq_ghz", "re_t", "im_t"]);
            for (f, z) in t.iter() {
                csv.row(&[f / 1e9, z.re, z.im]);
            }
            (output, (m, csv.into_bytes()))
        }
        SynthCommand::Saturation { points, decades, noise, output } => {
            check(noise)?;
            require_finite("decades", *decades)?;
            let m = RunManifest::new(
                "synth-saturation",
                &ctx.config_hash,
                Some(noise.seed),
                &ManifestArgs::Saturation { points: *points, decades: *decades, noise },
            );
            let c = saturation_curve(&params, *decades, *points, noise.noise, noise.seed)?;
            let mut csv = CsvBuilder::new(&m, &["power_w", "abs_t"]);
            for (p, t) in c.power.iter().zip(&c.abs_t) {
                csv.row(&[*p, *t]);
            }
            (output, (m, csv.into_bytes()))
        }
        SynthCommand::Calibrate { power, duration, noise, output } => {
            check(noise)?;
            let power = power.unwrap_or(ctx.config.probe.power_w);
            require_finite("power", power)?;
            require_finite("duration", *duration)?;
            if !(*duration > 0.0) {
                return Err(usage("--duration must be > 0"));
            }
            let m = RunManifest::new(
                "synth-calibrate",
                &ctx.config_hash,
                Some(noise.seed),
                &ManifestArgs::Calibrate { power, duration: *duration, noise },
            );
            let (on, off) = calibration_records(&params, power, duration * NS, noise.noise * NV, noise.seed)?;
            let mut csv = CsvBuilder::new(&m, &["time_ns", "re_on_nv", "im_on_nv", "re_off_nv", "im_off_nv"]);
            for ((t, a), b) in on.iter().zip(off.values()) {
                csv.row(&[t / NS, a.re / NV, a.im / NV, b.re / NV, b.im / NV]);
            }
            (output, (m, csv.into_bytes()))
        }
    };
    let (manifest, bytes) = body;
    emit(out.out.as_deref(), &bytes, &manifest)
}

fn check(noise: &Noise) -> CliResult<()> {
    if !(noise.noise >= 0.0) || !noise.noise.is_finite() {
        return Err(usage("--noise must be finite and >= 0"));
    }
    Ok(())
}
