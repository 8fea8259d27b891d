use std::path::PathBuf;

use num_complex::Complex64;
use serde_json::{json, Value};
use wqed_core::estimation::{
    calibrate_transmission, extract_qubit_params, fit_saturation, solve_line_budget, LineBudgetInput,
    SaturationCurve, SteadyWindow,
};
use wqed_core::units::{angular_to_ghz, angular_to_mhz};
use wqed_core::{IqTrace, TraceAxis, ValueKind};

use super::{require_finite, Context, Output};
use crate::error::{exit, CliResult};
use crate::manifest::{emit, to_json_bytes, RunManifest};
use crate::table::{read_table, InputTable};

const NS: f64 = 1e-9;
const NV: f64 = 1e-9;

#[derive(Debug, clap::Subcommand)]
pub enum FitCommand {
    /// Qubit parameters from a weak-probe transmission trace
    /// (columns freq_ghz, re_t, im_t).
    Circle {
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Γ, φ and k from resonant |t| versus probe power (columns power_w, abs_t).
    /// γ is held at the config value.
    Saturation {
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// |t| from on/off-resonance voltage records
    /// (columns time_ns, re_on_nv, im_on_nv, re_off_nv, im_off_nv), plus an
    /// optional attenuation/gain budget.
    Calibrate {
        input: PathBuf,
        /// Start of the steady-state window, ns.
        #[arg(long, default_value_t = 50.0)]
        window_from: f64,
        /// End of the steady-state window, ns.
        #[arg(long, default_value_t = 150.0)]
        window_to: f64,
        /// Ω² per W of source power from a saturation fit against source power.
        #[arg(long, requires_all = ["source_power", "output_power"])]
        fitted_k: Option<f64>,
        /// Source power used for the budget, W.
        #[arg(long, requires = "fitted_k")]
        source_power: Option<f64>,
        /// Digitizer-referred output power with the atom far detuned, W.
        #[arg(long, requires = "fitted_k")]
        output_power: Option<f64>,
        /// Independent end-to-end gain measurement, dB.
        #[arg(long, requires = "fitted_k", allow_negative_numbers = true)]
        end_to_end_db: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
}

pub fn run(ctx: &Context, cmd: &FitCommand) -> CliResult<()> {
    let (name, input, output) = match cmd {
        FitCommand::Circle { input, output } => ("fit-circle", input, output),
        FitCommand::Saturation { input, output } => ("fit-saturation", input, output),
        FitCommand::Calibrate { input, output, .. } => ("fit-calibrate", input, output),
    };
    let (table, flags) = match cmd {
        FitCommand::Circle { .. } => (read_table(input, &["freq_ghz", "re_t", "im_t"])?, json!({})),
        FitCommand::Saturation { .. } => (read_table(input, &["power_w", "abs_t"])?, json!({})),
        FitCommand::Calibrate {
            window_from, window_to, fitted_k, source_power, output_power, end_to_end_db, ..
        } => (
            read_table(input, &["time_ns", "re_on_nv", "im_on_nv", "re_off_nv", "im_off_nv"])?,
            json!({
                "window_from": window_from,
                "window_to": window_to,
                "fitted_k": fitted_k,
                "source_power": source_power,
                "output_power": output_power,
                "end_to_end_db": end_to_end_db,
            }),
        ),
    };
    // The input enters provenance by content, not by path.
    let args = json!({ "input_sha256": table.sha256, "flags": flags });
    let seed = table
        .manifest
        .as_ref()
        .and_then(|m| m.get("seed"))
        .and_then(Value::as_str)
        .and_then(|s| s.parse().ok());
    let manifest = RunManifest::new(name, &ctx.config_hash, seed, &args);

    let result = match cmd {
        FitCommand::Circle { .. } => circle(&table),
        FitCommand::Saturation { .. } => saturation(ctx, &table),
        FitCommand::Calibrate {
            window_from, window_to, fitted_k, source_power, output_power, end_to_end_db, ..
        } => calibrate(
            ctx,
            &table,
            (*window_from, *window_to),
            fitted_k.map(|k| (k, source_power.unwrap_or(0.0), output_power.unwrap_or(0.0), *end_to_end_db)),
        ),
    };
    let out = output.out.as_deref();
    match result {
        Ok(value) => emit(out, &report(&manifest, &table, "ok", value), &manifest),
        Err(e) if e.exit_code() == exit::FIT => {
            let failure = json!({ "kind": e.kind(), "message": e.to_string() });
            emit(out, &report(&manifest, &table, "failed", failure), &manifest)?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn report(manifest: &RunManifest, table: &InputTable, status: &str, body: Value) -> Vec<u8> {
    let key = if status == "ok" { "result" } else { "failure" };
    to_json_bytes(&json!({
        "command": manifest.command,
        "status": status,
        "manifest": manifest.hash,
        "config_hash": manifest.config_hash,
        "seed": manifest.seed,
        "tool_version": manifest.tool_version,
        "input_sha256": table.sha256,
        "input_manifest": table.input_manifest(),
        key: body,
    }))
}

fn trace(
    table: &InputTable,
    axis: TraceAxis,
    kind: ValueKind,
    x_scale: f64,
    re: usize,
    im: usize,
    v_scale: f64,
) -> CliResult<IqTrace> {
    let c = &table.columns;
    let x = c[0].iter().map(|v| v * x_scale).collect();
    let values = c[re].iter().zip(&c[im]).map(|(a, b)| Complex64::new(*a, *b) * v_scale).collect();
    Ok(IqTrace::new(axis, kind, x, values)?)
}

fn circle(table: &InputTable) -> CliResult<Value> {
    let t = trace(table, TraceAxis::Frequency, ValueKind::Transmission, 1e9, 1, 2, 1.0)?;
    let r = extract_qubit_params(&t)?;
    Ok(json!({
        "points": t.len(),
        "omega_ghz": angular_to_ghz(r.omega),
        "gamma_mhz": angular_to_mhz(r.relaxation),
        "decoherence_mhz": angular_to_mhz(r.decoherence),
        "gamma_n_mhz": angular_to_mhz(r.nonradiative),
        "phi_rad": r.phi,
        "std_errors": {
            "omega_ghz": angular_to_ghz(r.std_errors[0]),
            "gamma_mhz": angular_to_mhz(r.std_errors[1]),
            "decoherence_mhz": angular_to_mhz(r.std_errors[2]),
            "phi_rad": r.std_errors[3],
            "gamma_n_mhz": angular_to_mhz(r.std_error_nonradiative),
        },
        "rms_residual": r.rms_residual,
        "iterations": r.iterations,
        "converged": r.converged,
        "gamma_n_negative": r.gamma_n_negative,
        "span_ok": r.span_ok,
        "circle": r.circle,
    }))
}

fn saturation(ctx: &Context, table: &InputTable) -> CliResult<Value> {
    let curve = SaturationCurve::new(table.columns[0].clone(), table.columns[1].clone())?;
    let r = fit_saturation(&curve, &ctx.config.qubit_params()?)?;
    Ok(json!({
        "points": table.columns[0].len(),
        "gamma_mhz": angular_to_mhz(r.relaxation),
        "decoherence_mhz": angular_to_mhz(r.decoherence),
        "phi_rad": r.phi,
        "k": r.k,
        "std_errors": {
            "gamma_mhz": angular_to_mhz(r.std_errors[0]),
            "phi_rad": r.std_errors[1],
            "k": r.std_errors[2],
        },
        "held_fixed": r.held_fixed,
        "half_saturation_power_w": r.half_saturation_power,
        "rms_residual": r.rms_residual,
        "iterations": r.iterations,
        "converged": r.converged,
        "warnings": r.warnings,
    }))
}

type BudgetFlags = (f64, f64, f64, Option<f64>);

fn calibrate(ctx: &Context, table: &InputTable, window: (f64, f64), budget: Option<BudgetFlags>) -> CliResult<Value> {
    require_finite("window-from", window.0)?;
    require_finite("window-to", window.1)?;
    let on = trace(table, TraceAxis::Time, ValueKind::RawVoltage, NS, 1, 2, NV)?;
    let off = trace(table, TraceAxis::Time, ValueKind::RawVoltage, NS, 3, 4, NV)?;
    let cal = calibrate_transmission(&on, &off, &SteadyWindow { from: window.0 * NS, to: window.1 * NS })?;
    let line_budget = match budget {
        Some((fitted_k, source_power, measured_output_power, end_to_end_db)) => {
            let b = solve_line_budget(&LineBudgetInput {
                fitted_k,
                onchip_k: ctx.config.qubit_params()?.k(),
                source_power,
                measured_output_power,
                end_to_end_db,
            })?;
            serde_json::to_value(b).expect("budget serializes")
        }
        None => Value::Null,
    };
    let nv = |z: Complex64| [z.re / NV, z.im / NV];
    Ok(json!({
        "abs_t": cal.abs_t,
        "mean_on_nv": nv(cal.mean_on),
        "mean_off_nv": nv(cal.mean_off),
        "samples": cal.samples,
        "window_ns": [window.0, window.1],
        "line_budget": line_budget,
    }))
}

