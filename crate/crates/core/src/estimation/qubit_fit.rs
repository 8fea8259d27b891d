//! Extraction of (ω, Γ, γ, φ) from a weak-probe transmission sweep.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use super::circle::{circle_fit, CircleFitResult};
use super::lm::{minimize, LeastSquares, LmConfig};
use crate::error::{Error, Result};
use crate::trace::{IqTrace, TraceAxis, ValueKind};

/// Weak-probe transmission at probe frequency `f` (Hz) for a resonance at
/// `f0` (Hz), rates in rad/s.
pub fn weak_transmission(f: f64, f0: f64, relaxation: f64, decoherence: f64, phi: f64) -> Complex64 {
    let x = TAU * (f - f0) / decoherence;
    let r = -Complex64::from_polar(relaxation / (2.0 * decoherence), phi) / Complex64::new(1.0, x);
    Complex64::new(1.0, 0.0) + r
}

#[derive(Debug, Clone, Serialize)]
pub struct QubitFitReport {
    /// Resonance, rad/s.
    pub omega: f64,
    /// Γ, rad/s.
    pub relaxation: f64,
    /// γ, rad/s.
    pub decoherence: f64,
    /// Γⁿ = γ − Γ/2, rad/s; may be negative, see `gamma_n_negative`.
    pub nonradiative: f64,
    pub phi: f64,
    /// One-sigma errors of (ω, Γ, γ, φ), same units as the values.
    pub std_errors: [f64; 4],
    pub std_error_nonradiative: f64,
    /// Covariance of (ω, Γ, γ, φ).
    pub covariance: [[f64; 4]; 4],
    pub rms_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gamma_n_negative: bool,
    /// Trace covers at least ±3γ around the fitted resonance.
    pub span_ok: bool,
    pub circle: CircleFitResult,
    /// Starting point of the refinement, (ω, Γ, γ, φ).
    pub initial: [f64; 4],
}

/// Parameters in fit units: resonance offset and rates in MHz, φ in rad.
struct WeakModel<'a> {
    freqs: &'a [f64],
    values: &'a [Complex64],
    f_ref: f64,
}

impl WeakModel<'_> {
    fn unpack(&self, p: &[f64]) -> (f64, f64, f64, f64) {
        (self.f_ref + p[0] * 1e6, TAU * p[1] * 1e6, TAU * p[2] * 1e6, p[3])
    }
}

impl LeastSquares for WeakModel<'_> {
    fn residuals(&self, p: &[f64]) -> Vec<f64> {
        let (f0, big, small, phi) = self.unpack(p);
        let mut out = Vec::with_capacity(2 * self.freqs.len());
        for (f, z) in self.freqs.iter().zip(self.values) {
            let d = weak_transmission(*f, f0, big, small, phi) - z;
            out.push(d.re);
            out.push(d.im);
        }
        out
    }
}

/// Full width at half maximum of `|1 − t|²` by linear interpolation, Hz.
fn half_width_hz(freqs: &[f64], values: &[Complex64], peak: usize) -> Option<f64> {
    let depth: Vec<f64> = values.iter().map(|z| (Complex64::new(1.0, 0.0) - z).norm_sqr()).collect();
    let half = depth[peak] / 2.0;
    let cross = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = peak;
        for i in range {
            if depth[i] <= half {
                let frac = (depth[prev] - half) / (depth[prev] - depth[i]);
                return Some(freqs[prev] + frac * (freqs[i] - freqs[prev]));
            }
            prev = i;
        }
        None
    };
    let hi = cross(&mut (peak + 1..freqs.len()))?;
    let lo = cross(&mut (0..peak).rev())?;
    Some((hi - lo).abs() / 2.0)
}

pub fn extract_qubit_params(trace: &IqTrace) -> Result<QubitFitReport> {
    if trace.axis() != TraceAxis::Frequency || trace.kind() != ValueKind::Transmission {
        return Err(Error::Usage("qubit extraction needs a transmission trace over frequency".into()));
    }
    let circle = circle_fit(trace.values())?;
    let freqs = trace.x();
    let values = trace.values();
    let one = Complex64::new(1.0, 0.0);

    // starting point
    let peak = values
        .iter()
        .enumerate()
        .max_by(|a, b| (one - a.1).norm().total_cmp(&(one - b.1).norm()))
        .map(|(i, _)| i)
        .expect("circle fit guarantees >= 3 points");
    let f0 = freqs[peak];
    let diameter = 2.0 * circle.radius;
    let half_width = half_width_hz(freqs, values, peak).ok_or_else(|| {
        Error::FitFailure("trace does not reach half depth on both sides of resonance".into())
    })?;
    let decoherence0 = TAU * half_width;
    let relaxation0 = 2.0 * decoherence0 * diameter;
    let phi0 = (one - circle.center).arg();
    let initial = [TAU * f0, relaxation0, decoherence0, phi0];

    let model = WeakModel { freqs, values, f_ref: f0 };
    let start = [0.0, relaxation0 / TAU / 1e6, decoherence0 / TAU / 1e6, phi0];
    let out = minimize(&model, &start, &LmConfig::default())?;
    if !out.converged {
        return Err(Error::FitFailure(format!("no convergence after {} iterations", out.iterations)));
    }
    let (f_fit, relaxation, decoherence, phi) = model.unpack(&out.params);
    if !(relaxation > 0.0 && decoherence > 0.0) {
        return Err(Error::FitFailure("fitted rates are not positive".into()));
    }
    let phi = (phi + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;

    // fit units → rad/s (and rad) for the covariance
    let scale = [TAU * 1e6, TAU * 1e6, TAU * 1e6, 1.0];
    let mut covariance = [[0.0; 4]; 4];
    if let Some(c) = out.covariance() {
        for i in 0..4 {
            for j in 0..4 {
                covariance[i][j] = c[(i, j)] * scale[i] * scale[j];
            }
        }
    }
    let std_errors = [0, 1, 2, 3].map(|i| covariance[i][i].max(0.0).sqrt());
    let var_n = covariance[2][2] + 0.25 * covariance[1][1] - covariance[1][2];
    let std_error_nonradiative = var_n.max(0.0).sqrt();
    let nonradiative = decoherence - relaxation / 2.0;

    if nonradiative < -3.0 * std_error_nonradiative - 1e-6 * decoherence {
        return Err(Error::FitFailure(format!(
            "Gamma_n = {:.4} MHz is more than 3 sigma below zero",
            nonradiative / TAU / 1e6
        )));
    }

    let (fmin, fmax) = freqs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), f| (a.min(*f), b.max(*f)));
    let reach = 3.0 * decoherence / TAU;
    let span_ok = fmin <= f_fit - reach && fmax >= f_fit + reach;

    Ok(QubitFitReport {
        omega: TAU * f_fit,
        relaxation,
        decoherence,
        nonradiative,
        phi,
        std_errors,
        std_error_nonradiative,
        covariance,
        rms_residual: out.rms(),
        iterations: out.iterations,
        converged: out.converged,
        gamma_n_negative: nonradiative < 0.0,
        span_ok,
        circle,
        initial,
    })
}
