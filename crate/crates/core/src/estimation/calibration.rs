//! Line calibration: steady-state transmission magnitude from on/off
//! resonance voltage records, and the attenuation/gain budget of the
//! input and output chains.

use serde::Serialize;

use num_complex::Complex64;

use crate::error::{ensure_finite, Error, Result};
use crate::trace::{IqTrace, TraceAxis};
use crate::units::power_ratio_to_db;

/// Averaging window on the record's time axis, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyWindow {
    pub from: f64,
    pub to: f64,
}

impl Default for SteadyWindow {
    fn default() -> Self {
        Self { from: 50e-9, to: 150e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransmissionCalibration {
    pub abs_t: f64,
    pub mean_on: Complex64,
    pub mean_off: Complex64,
    pub samples: usize,
}

fn window_mean(trace: &IqTrace, window: &SteadyWindow) -> (Complex64, usize) {
    let (sum, n) = trace
        .iter()
        .filter(|(t, _)| *t >= window.from && *t <= window.to)
        .fold((Complex64::new(0.0, 0.0), 0usize), |(s, n), (_, v)| (s + v, n + 1));
    (if n > 0 { sum / n as f64 } else { sum }, n)
}

/// `|t| = |⟨V_on⟩ / ⟨V_off⟩|` with both means over the same window.
pub fn calibrate_transmission(
    on: &IqTrace,
    off: &IqTrace,
    window: &SteadyWindow,
) -> Result<TransmissionCalibration> {
    if on.axis() != TraceAxis::Time || off.axis() != TraceAxis::Time {
        return Err(Error::Usage("calibration records must be indexed by time".into()));
    }
    if on.len() != off.len() || on.x().iter().zip(off.x()).any(|(a, b)| (a - b).abs() > 1e-6 * a.abs().max(1e-15)) {
        return Err(Error::Usage("on- and off-resonance records must share a time grid".into()));
    }
    if !(window.from < window.to) {
        return Err(Error::Usage("empty averaging window".into()));
    }
    let (mean_on, n) = window_mean(on, window);
    let (mean_off, _) = window_mean(off, window);
    if n == 0 {
        return Err(Error::Usage("no samples inside the averaging window".into()));
    }
    if mean_off.norm() == 0.0 {
        return Err(Error::DegenerateReference("off-resonance mean is zero".into()));
    }
    Ok(TransmissionCalibration { abs_t: (mean_on / mean_off).norm(), mean_on, mean_off, samples: n })
}

pub fn calibrate_transmission_batch(
    pairs: &[(IqTrace, IqTrace)],
    window: &SteadyWindow,
) -> Result<Vec<TransmissionCalibration>> {
    pairs.iter().map(|(on, off)| calibrate_transmission(on, off, window)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineBudgetInput {
    /// Ω² per W of *source* power from a saturation fit against source power.
    pub fitted_k: f64,
    /// Ω² per W of on-chip power.
    pub onchip_k: f64,
    pub source_power: f64,
    /// Digitizer-referred power with the atom far detuned, W.
    pub measured_output_power: f64,
    /// Independent end-to-end gain measurement, dB.
    pub end_to_end_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineBudget {
    pub attenuation_db: f64,
    pub gain_db: f64,
    /// `A + G − end_to_end` when a reference was supplied.
    pub mismatch_db: Option<f64>,
    /// Mismatch within 0.1 dB (or no reference).
    pub consistent: bool,
}

const MISMATCH_FLAG_DB: f64 = 0.1;
const MISMATCH_ERROR_DB: f64 = 1.0;

/// Attenuation from the ratio of source-referred to on-chip Rabi constants,
/// gain from the far-detuned output (which carries the full on-chip input).
pub fn solve_line_budget(input: &LineBudgetInput) -> Result<LineBudget> {
    for (name, v) in [
        ("fitted k", input.fitted_k),
        ("on-chip k", input.onchip_k),
        ("source power", input.source_power),
        ("measured output power", input.measured_output_power),
    ] {
        ensure_finite(name, v)?;
        if v <= 0.0 {
            return Err(Error::Domain(format!("{name} must be > 0, got {v}")));
        }
    }
    let attenuation = input.fitted_k / input.onchip_k;
    let onchip_power = attenuation * input.source_power;
    let gain = input.measured_output_power / onchip_power;
    let attenuation_db = power_ratio_to_db(attenuation);
    let gain_db = power_ratio_to_db(gain);

    let mismatch_db = match input.end_to_end_db {
        Some(e2e) => {
            ensure_finite("end-to-end gain", e2e)?;
            let m = attenuation_db + gain_db - e2e;
            if m.abs() > MISMATCH_ERROR_DB {
                return Err(Error::CalibrationInconsistent(format!(
                    "A + G = {:.3} dB but end-to-end is {e2e:.3} dB",
                    attenuation_db + gain_db
                )));
            }
            Some(m)
        }
        None => None,
    };
    Ok(LineBudget {
        attenuation_db,
        gain_db,
        mismatch_db,
        consistent: mismatch_db.is_none_or(|m| m.abs() <= MISMATCH_FLAG_DB),
    })
}

/// Forward model for a chain with attenuation `a_db` and gain `g_db`:
/// the budget inputs that chain would produce.
pub fn line_budget_observation(onchip_k: f64, source_power: f64, a_db: f64, g_db: f64) -> LineBudgetInput {
    let a = 10f64.powf(a_db / 10.0);
    let g = 10f64.powf(g_db / 10.0);
    LineBudgetInput {
        fitted_k: onchip_k * a,
        onchip_k,
        source_power,
        measured_output_power: g * a * source_power,
        end_to_end_db: Some(a_db + g_db),
    }
}
