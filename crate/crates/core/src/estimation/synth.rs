//! Seeded synthetic data from the forward models. The same seed always
//! gives the same unit-variance noise draws, which are then scaled by the
//! requested σ.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::qubit_fit::weak_transmission;
use super::saturation::{saturation_model, SaturationCurve};
use crate::dynamics::{integrate_bloch, max_stable_dt, BlochState, ProbeDrive};
use crate::error::{Error, Result};
use crate::scattering::{rabi_from_power, QubitParams};
use crate::trace::{IqTrace, TraceAxis, ValueKind};

fn complex_noise(rng: &mut ChaCha8Rng, sigma: f64) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * sigma
}

fn check_noise(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Usage(format!("noise sigma must be finite and >= 0, got {sigma}")));
    }
    Ok(())
}

/// Weak-probe transmission on `points` probe frequencies spanning
/// ±`span_gammas`·γ around resonance.
pub fn weak_probe_trace(
    params: &QubitParams,
    span_gammas: f64,
    points: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<IqTrace> {
    check_noise(noise_sigma)?;
    if points < 3 || !(span_gammas > 0.0) {
        return Err(Error::Usage("need >= 3 points and a positive span".into()));
    }
    let f0 = params.omega() / TAU;
    let half = span_gammas * params.decoherence() / TAU;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freqs: Vec<f64> = (0..points)
        .map(|i| f0 - half + 2.0 * half * i as f64 / (points - 1) as f64)
        .collect();
    let values = freqs
        .iter()
        .map(|f| {
            weak_transmission(*f, f0, params.relaxation(), params.decoherence(), params.phi())
                + complex_noise(&mut rng, noise_sigma)
        })
        .collect();
    IqTrace::new(TraceAxis::Frequency, ValueKind::Transmission, freqs, values)
}

/// Resonant |t| on a log power grid spanning ±`decades` around the
/// half-saturation power. Noise is added to |t|.
pub fn saturation_curve(
    params: &QubitParams,
    decades: f64,
    points: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<SaturationCurve> {
    check_noise(noise_sigma)?;
    if points < 4 || !(decades > 0.0) {
        return Err(Error::Usage("need >= 4 points and a positive decade span".into()));
    }
    let center = params.half_saturation_power().log10();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let power: Vec<f64> = (0..points)
        .map(|i| 10f64.powf(center - decades + 2.0 * decades * i as f64 / (points - 1) as f64))
        .collect();
    let abs_t = power
        .iter()
        .map(|p| {
            let n: f64 = StandardNormal.sample(&mut rng);
            saturation_model(*p, params.relaxation(), params.decoherence(), params.phi(), params.k())
                + noise_sigma * n
        })
        .collect();
    SaturationCurve::new(power, abs_t)
}

/// Transmitted-voltage records for a probe switched on at t = 0 with the
/// qubit on resonance (`on`) and without interaction (`off`, the atom far
/// detuned so that V₃ = V_in).
pub fn calibration_records(
    params: &QubitParams,
    probe_power: f64,
    duration: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<(IqTrace, IqTrace)> {
    check_noise(noise_sigma)?;
    let rabi = rabi_from_power(params, probe_power)?;
    let probe = ProbeDrive::constant(params, params.omega(), rabi, 2);
    let dt = 0.5 * max_stable_dt(params, &probe, &[params.omega(); 2]);
    let n = (duration / dt).ceil() as usize + 1;
    let drive = ProbeDrive::constant(params, params.omega(), rabi, n);
    let res = integrate_bloch(params, &drive, &vec![params.omega(); n], dt, BlochState::ground())?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let on: Vec<Complex64> = res.v3.iter().map(|v| v + complex_noise(&mut rng, noise_sigma)).collect();
    let off: Vec<Complex64> = res.v_in.iter().map(|v| v + complex_noise(&mut rng, noise_sigma)).collect();
    Ok((
        IqTrace::new(TraceAxis::Time, ValueKind::RawVoltage, res.times.clone(), on)?,
        IqTrace::new(TraceAxis::Time, ValueKind::RawVoltage, res.times, off)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_noise_is_reproducible_and_linear() {
        let p = QubitParams::reference();
        let a = weak_probe_trace(&p, 3.0, 50, 0.01, 9).unwrap();
        let b = weak_probe_trace(&p, 3.0, 50, 0.01, 9).unwrap();
        let c = weak_probe_trace(&p, 3.0, 50, 0.02, 9).unwrap();
        let clean = weak_probe_trace(&p, 3.0, 50, 0.0, 9).unwrap();
        assert_eq!(a, b);
        for i in 0..50 {
            let da = a.values()[i] - clean.values()[i];
            let dc = c.values()[i] - clean.values()[i];
            assert!((dc - da * 2.0).norm() < 1e-15);
        }
    }
}
