use serde::Serialize;
use wqed_core::scattering::{detuning_sweep, rabi_from_power};
use wqed_core::units::{angular_to_ghz, ghz_to_angular};

use super::{linspace, require_finite, usage, Context, Output};
use crate::error::CliResult;
use crate::manifest::{emit, RunManifest};
use crate::table::CsvBuilder;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Lowest qubit frequency, GHz.
    #[arg(long, default_value_t = 4.05)]
    pub omega_min: f64,
    /// Highest qubit frequency, GHz.
    #[arg(long, default_value_t = 4.25)]
    pub omega_max: f64,
    #[arg(long, default_value_t = 401)]
    pub points: usize,
    /// On-chip probe power, W. Zero is the weak-drive limit.
    #[arg(long, default_value_t = 0.0)]
    pub power: f64,
    /// Probe frequency, GHz. Defaults to the config's probe.
    #[arg(long)]
    pub probe_ghz: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

pub fn run(ctx: &Context, args: &Args) -> CliResult<()> {
    require_finite("omega-min", args.omega_min)?;
    require_finite("omega-max", args.omega_max)?;
    require_finite("power", args.power)?;
    if args.points == 0 {
        return Err(usage("--points must be >= 1"));
    }
    if args.points > 1 && args.omega_max <= args.omega_min {
        return Err(usage("--omega-max must exceed --omega-min"));
    }
    if args.omega_min <= 0.0 {
        return Err(usage("--omega-min must be > 0"));
    }
    if args.power < 0.0 {
        return Err(usage("--power must be >= 0"));
    }
    let params = ctx.config.qubit_params()?;
    let omega_p = match args.probe_ghz {
        Some(g) => {
            require_finite("probe-ghz", g)?;
            ghz_to_angular(g)
        }
        None => ctx.config.probe_omega(),
    };
    let rabi = rabi_from_power(&params, args.power)?;
    let grid: Vec<f64> =
        linspace(args.omega_min, args.omega_max, args.points).into_iter().map(ghz_to_angular).collect();
    let sweep = detuning_sweep(&params, omega_p, rabi, &grid)?;

    let manifest = RunManifest::new("spectrum", &ctx.config_hash, None, args);
    let mut csv = CsvBuilder::new(&manifest, &["omega_ghz", "T", "R", "S"]);
    for (w, c) in sweep.qubit_omega.iter().zip(&sweep.points) {
        csv.row(&[angular_to_ghz(*w), c.transmittance, c.reflectance, c.sum]);
    }
    emit(args.output.out.as_deref(), &csv.into_bytes(), &manifest)
}
