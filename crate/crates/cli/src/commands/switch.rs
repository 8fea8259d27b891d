use serde::Serialize;
use wqed_core::dynamics::{simulate_switching, switching_map, SwitchingProtocol, SwitchingRun};
use wqed_core::transmon::GaussianSquare;
use wqed_core::units::angular_to_ghz;

use super::{linspace, require_finite, usage, Context, Output};
use crate::error::CliResult;
use crate::manifest::{emit, RunManifest};
use crate::table::CsvBuilder;

const NS: f64 = 1e-9;
const NV: f64 = 1e-9;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Control-voltage amplitude of the flux pulse, V.
    #[arg(long, default_value_t = 0.220)]
    pub pulse_amp: f64,
    /// Plateau length, ns.
    #[arg(long, default_value_t = 200.0)]
    pub pulse_len: f64,
    /// Gaussian edge σ, ns.
    #[arg(long, default_value_t = 5.0)]
    pub rise: f64,
    /// Idle time before the pulse, ns.
    #[arg(long, default_value_t = 50.0)]
    pub lead: f64,
    /// Idle time after the pulse, ns.
    #[arg(long, default_value_t = 200.0)]
    pub tail: f64,
    /// On-chip probe power, W. Defaults to the config's probe power.
    #[arg(long)]
    pub power: Option<f64>,
    /// Integration step as a fraction of the stability limit.
    #[arg(long, default_value_t = 0.5)]
    pub step_fraction: f64,
    /// First amplitude of a pulse-amplitude scan, V (long-form output).
    #[arg(long, requires_all = ["scan_max", "scan_points"])]
    pub scan_min: Option<f64>,
    #[arg(long, requires_all = ["scan_min", "scan_points"])]
    pub scan_max: Option<f64>,
    #[arg(long, requires_all = ["scan_min", "scan_max"])]
    pub scan_points: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

pub fn run(ctx: &Context, args: &Args) -> CliResult<()> {
    for (name, v) in [
        ("pulse-amp", args.pulse_amp),
        ("pulse-len", args.pulse_len),
        ("rise", args.rise),
        ("lead", args.lead),
        ("tail", args.tail),
        ("step-fraction", args.step_fraction),
    ] {
        require_finite(name, v)?;
    }
    if args.pulse_len < 0.0 || args.rise < 0.0 || args.lead < 0.0 || args.tail < 0.0 {
        return Err(usage("pulse durations must be >= 0"));
    }
    let params = ctx.config.qubit_params()?;
    let spec = ctx.config.transmon_spec()?;
    let power = args.power.unwrap_or(ctx.config.probe.power_w);
    require_finite("power", power)?;
    if power < 0.0 {
        return Err(usage("--power must be >= 0"));
    }
    let protocol = SwitchingProtocol {
        omega_p: ctx.config.probe_omega(),
        probe_power: power,
        base_flux: spec.flux_offset(),
        pulse: GaussianSquare {
            amplitude: args.pulse_amp,
            plateau: args.pulse_len * NS,
            rise_sigma: args.rise * NS,
            lead: args.lead * NS,
            tail: args.tail * NS,
        },
        step_fraction: args.step_fraction,
    };
    let manifest = RunManifest::new("switch", &ctx.config_hash, None, args);

    let body = match (args.scan_min, args.scan_max, args.scan_points) {
        (Some(lo), Some(hi), Some(n)) => {
            require_finite("scan-min", lo)?;
            require_finite("scan-max", hi)?;
            if n == 0 || (n > 1 && hi <= lo) {
                return Err(usage("scan needs --scan-points >= 1 and --scan-max > --scan-min"));
            }
            let amps = linspace(lo, hi, n);
            let runs = switching_map(&params, &spec, &protocol, &amps)?;
            let mut csv = CsvBuilder::new(&manifest, &["pulse_amp_v", "time_ns", "qubit_ghz", "T", "R"]);
            for (amp, run) in amps.iter().zip(&runs) {
                let res = &run.result;
                for i in 0..res.len() {
                    csv.row(&[
                        *amp,
                        res.times[i] / NS,
                        angular_to_ghz(run.trajectory[i]),
                        res.transmittance[i],
                        res.reflectance[i],
                    ]);
                }
            }
            csv.into_bytes()
        }
        _ => single_run_csv(&manifest, &simulate_switching(&params, &spec, &protocol)?),
    };
    emit(args.output.out.as_deref(), &body, &manifest)
}

fn single_run_csv(manifest: &RunManifest, run: &SwitchingRun) -> Vec<u8> {
    let mut csv = CsvBuilder::new(
        manifest,
        &[
            "time_ns", "pulse_v", "qubit_ghz", "re_sm", "im_sm", "sz", "T", "R", "re_v3_nv", "im_v3_nv",
            "re_v4_nv", "im_v4_nv",
        ],
    );
    let res = &run.result;
    for i in 0..res.len() {
        let s = &res.states[i];
        csv.row(&[
            res.times[i] / NS,
            run.pulse.samples()[i],
            angular_to_ghz(run.trajectory[i]),
            s.coherence.re,
            s.coherence.im,
            s.inversion,
            res.transmittance[i],
            res.reflectance[i],
            res.v3[i].re / NV,
            res.v3[i].im / NV,
            res.v4[i].re / NV,
            res.v4[i].im / NV,
        ]);
    }
    csv.into_bytes()
}
