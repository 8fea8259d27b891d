use std::f64::consts::TAU;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;
use wqed_core::interferometer::{
    fit_sinusoid, fringe_scan, nonlinear_fringe_scan, visibility, FringeTrace, LineCalibration, ScatterMatrix2,
};
use wqed_core::units::ghz_to_angular;

use super::{require_finite, usage, Context, Output};
use crate::error::CliResult;
use crate::manifest::{emit, to_json_bytes, write_atomic, RunManifest};
use crate::table::CsvBuilder;

const NV: f64 = 1e-9;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Number of phase samples over one period [0, 2π).
    #[arg(long, default_value_t = 360)]
    pub theta_points: usize,
    /// Power change applied to both inputs, dB.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub power: f64,
    /// Let the atom saturate under the coherent sum of both drives.
    #[arg(long, conflicts_with = "far_detuned")]
    pub nonlinear: bool,
    /// Qubit tuned far away: the line passes both inputs straight through.
    #[arg(long)]
    pub far_detuned: bool,
    /// JSON report destination. Standard error when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

pub fn run(ctx: &Context, args: &Args) -> CliResult<()> {
    require_finite("power", args.power)?;
    if args.theta_points < 3 {
        return Err(usage("--theta-points must be >= 3"));
    }
    let fx = ctx.config.fixture()?;
    let v1 = fx.v1.scaled_db(args.power);
    let v2 = fx.v2.scaled_db(args.power);
    let thetas: Vec<f64> = (0..args.theta_points).map(|i| TAU * i as f64 / args.theta_points as f64).collect();

    let (mode, trace) = if args.far_detuned {
        ("far_detuned", fringe_scan(&ScatterMatrix2::identity(), &v1, &v2, &thetas)?)
    } else if args.nonlinear {
        let params = ctx.config.qubit_params()?.with_omega(ghz_to_angular(ctx.config.line.qubit_ghz))?;
        let omega_p = ctx.config.probe_omega();
        let cal = LineCalibration::fit(&fx.matrix, &params, omega_p)?;
        ("nonlinear", nonlinear_fringe_scan(&params, &cal, omega_p, &v1, &v2, &thetas)?)
    } else {
        ("linear", fringe_scan(&fx.matrix, &v1, &v2, &thetas)?)
    };
    let trace = trace.with_leakage(&ctx.config.leakage());

    let manifest = RunManifest::new("combine", &ctx.config_hash, None, args);
    let csv = fringe_csv(&manifest, &trace);
    let report = report_json(&manifest, mode, args, &trace, v1.power(), v2.power())?;

    emit(args.output.out.as_deref(), &csv, &manifest)?;
    match &args.report {
        Some(path) => write_atomic(path, &report),
        None => {
            eprint!("{}", String::from_utf8_lossy(&report));
            Ok(())
        }
    }
}

fn fringe_csv(manifest: &RunManifest, trace: &FringeTrace) -> Vec<u8> {
    let mut csv = CsvBuilder::new(
        manifest,
        &["theta_rad", "abs_v3_sq_nv2", "abs_v4_sq_nv2", "re_v3_nv", "im_v3_nv", "re_v4_nv", "im_v4_nv"],
    );
    for i in 0..trace.theta.len() {
        let (v3, v4) = (trace.v3[i] / NV, trace.v4[i] / NV);
        csv.row(&[trace.theta[i], v3.norm_sqr(), v4.norm_sqr(), v3.re, v3.im, v4.re, v4.im]);
    }
    csv.into_bytes()
}

fn report_json(
    manifest: &RunManifest,
    mode: &str,
    args: &Args,
    trace: &FringeTrace,
    p1: f64,
    p2: f64,
) -> CliResult<Vec<u8>> {
    let scale = |p: Vec<f64>| -> Vec<f64> { p.into_iter().map(|x| x / (NV * NV)).collect() };
    let p3 = scale(trace.power3());
    let p4 = scale(trace.power4());
    let fit3 = fit_sinusoid(&trace.theta, &p3)?;
    let fit4 = fit_sinusoid(&trace.theta, &p4)?;
    let v3 = trace.v3[0] / NV;
    let v4 = trace.v4[0] / NV;
    Ok(to_json_bytes(&json!({
        "command": "combine",
        "manifest": manifest.hash,
        "mode": mode,
        "theta_points": args.theta_points,
        "power_db": args.power,
        "input_power_w": [p1, p2],
        "visibility": { "v3": visibility(&p3), "v4": visibility(&p4) },
        "sinusoid_nv2": { "v3": fit3, "v4": fit4 },
        "theta_zero_nv": { "v3": [v3.re, v3.im], "v4": [v4.re, v4.im] },
    })))
}
