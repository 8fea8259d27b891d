//! Optical-Bloch dynamics of the driven atom with a time-dependent qubit
//! frequency, in the frame rotating at the probe frequency.
//!
//! ```text
//! d⟨σ⁻⟩/dt = −(iδ(t) + γ)⟨σ⁻⟩ − i(Ω(t)/2)⟨σ_z⟩
//! d⟨σ_z⟩/dt = −Γ(⟨σ_z⟩ + 1) + iΩ(t)(⟨σ⁺⟩ − ⟨σ⁻⟩)
//! ```
//!
//! The emitted (reflected) field is `V₄ = i e^{iφ} Γ ⟨σ⁻⟩ · v` where `v` is
//! the input amplitude per unit Rabi frequency, so that `V₄/V_in` equals the
//! closed-form reflection coefficient in steady state, Ω² term included.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ensure_finite, Error, Result};
use crate::scattering::{DriveCondition, QubitParams};
use crate::transmon::{FluxPulse, GaussianSquare, TransmonSpec};
use crate::units::LINE_IMPEDANCE_OHM;

/// Largest allowed `dt · max(Γ, |δ|, Ω)`.
pub const STABILITY_LIMIT: f64 = 0.05;

const BALL_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    /// ⟨σ⁻⟩ in the probe frame.
    pub coherence: Complex64,
    /// ⟨σ_z⟩, −1 in the ground state.
    pub inversion: f64,
}

impl BlochState {
    pub fn ground() -> Self {
        Self { coherence: Complex64::new(0.0, 0.0), inversion: -1.0 }
    }

    /// `4|⟨σ⁻⟩|² + ⟨σ_z⟩²`, at most 1 for a physical state.
    pub fn radius_sq(&self) -> f64 {
        4.0 * self.coherence.norm_sqr() + self.inversion * self.inversion
    }

    pub fn is_physical(&self) -> bool {
        self.coherence.norm() <= 0.5 + 1e-9
            && (-1.0 - 1e-9..=1.0 + 1e-9).contains(&self.inversion)
            && self.radius_sq() <= 1.0 + BALL_SLACK
    }
}

pub fn bloch_steady_state(params: &QubitParams, drive: &DriveCondition) -> Result<BlochState> {
    ensure_finite("omega_p", drive.omega_p)?;
    ensure_finite("Omega", drive.rabi)?;
    Ok(steady_state_at(params, drive.detuning(params), drive.rabi))
}

fn steady_state_at(params: &QubitParams, delta: f64, rabi: f64) -> BlochState {
    let gamma = params.decoherence();
    let x = delta / gamma;
    let d = 1.0 + x * x + rabi * rabi / (gamma * params.relaxation());
    BlochState {
        coherence: Complex64::new(x, 1.0) * (rabi / (2.0 * gamma * d)),
        inversion: -(1.0 + x * x) / d,
    }
}

/// Field radiated by the atom per unit input-amplitude-per-Rabi.
pub fn emitted_field(params: &QubitParams, coherence: Complex64) -> Complex64 {
    Complex64::new(0.0, params.relaxation()) * Complex64::from_polar(1.0, params.phi()) * coherence
}

/// Reflection coefficient reconstructed from the coherence; `None` if the
/// drive is off.
pub fn reflection_from_state(params: &QubitParams, state: &BlochState, rabi: f64) -> Option<Complex64> {
    (rabi > 0.0).then(|| emitted_field(params, state.coherence) / rabi)
}

/// Continuous probe with a time-dependent Rabi envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeDrive {
    pub omega_p: f64,
    /// Ω(t), rad/s, one per grid sample.
    pub envelope: Vec<f64>,
    /// Input amplitude (V) per rad/s of Rabi frequency.
    pub field_per_rabi: Complex64,
}

impl ProbeDrive {
    /// Input amplitude per Rabi frequency implied by `Ω² = kP` and
    /// `P = |V|²/2Z₀`.
    pub fn field_per_rabi_for(params: &QubitParams) -> f64 {
        (2.0 * LINE_IMPEDANCE_OHM / params.k()).sqrt()
    }

    pub fn constant(params: &QubitParams, omega_p: f64, rabi: f64, len: usize) -> Self {
        Self {
            omega_p,
            envelope: vec![rabi; len],
            field_per_rabi: Complex64::new(Self::field_per_rabi_for(params), 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientResult {
    pub times: Vec<f64>,
    pub states: Vec<BlochState>,
    pub v_in: Vec<Complex64>,
    pub v3: Vec<Complex64>,
    pub v4: Vec<Complex64>,
    pub transmittance: Vec<f64>,
    pub reflectance: Vec<f64>,
}

impl TransientResult {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mean (T, R) over samples with `from <= t <= to`.
    pub fn window_mean(&self, from: f64, to: f64) -> Option<(f64, f64)> {
        let (mut n, mut t, mut r) = (0usize, 0.0, 0.0);
        for i in 0..self.len() {
            if self.times[i] >= from && self.times[i] <= to {
                n += 1;
                t += self.transmittance[i];
                r += self.reflectance[i];
            }
        }
        (n > 0).then(|| (t / n as f64, r / n as f64))
    }

    /// Columns `time_ns, re_sm, im_sm, sz, T, R, re_V3, im_V3, re_V4, im_V4`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "time_ns", "re_sm", "im_sm", "sz", "T", "R", "re_V3", "im_V3", "re_V4", "im_V4",
        ])?;
        for i in 0..self.len() {
            let s = &self.states[i];
            w.write_record(&[
                (self.times[i] * 1e9).to_string(),
                s.coherence.re.to_string(),
                s.coherence.im.to_string(),
                s.inversion.to_string(),
                self.transmittance[i].to_string(),
                self.reflectance[i].to_string(),
                self.v3[i].re.to_string(),
                self.v3[i].im.to_string(),
                self.v4[i].re.to_string(),
                self.v4[i].im.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Deriv {
    ds: Complex64,
    dz: f64,
}

fn bloch_rhs(relax: f64, gamma: f64, delta: f64, rabi: f64, s: Complex64, z: f64) -> Deriv {
    let i = Complex64::i();
    let ds = -(i * delta + gamma) * s - i * (0.5 * rabi * z);
    // iΩ(s* − s) = 2Ω Im s
    let dz = -relax * (z + 1.0) + 2.0 * rabi * s.im;
    Deriv { ds, dz }
}

/// Value halfway between samples `i` and `i + 1`, fourth-order accurate
/// where neighbours allow.
fn midpoint(f: &[f64], i: usize) -> f64 {
    let n = f.len();
    match (i > 0, i + 2 < n) {
        (true, true) => (-f[i - 1] + 9.0 * f[i] + 9.0 * f[i + 1] - f[i + 2]) / 16.0,
        (false, true) => (3.0 * f[i] + 6.0 * f[i + 1] - f[i + 2]) / 8.0,
        (true, false) => (-f[i - 1] + 6.0 * f[i] + 3.0 * f[i + 1]) / 8.0,
        (false, false) => 0.5 * (f[i] + f[i + 1]),
    }
}

/// Largest step allowed by the stability contract for the given inputs.
pub fn max_stable_dt(params: &QubitParams, drive: &ProbeDrive, freq_trajectory: &[f64]) -> f64 {
    let mut rate = params.relaxation();
    for (w, rabi) in freq_trajectory.iter().zip(&drive.envelope) {
        rate = rate.max((drive.omega_p - w).abs()).max(rabi.abs());
    }
    STABILITY_LIMIT / rate
}

/// Fixed-step RK4 integration on the uniform grid `t_k = k·dt`.
pub fn integrate_bloch(
    params: &QubitParams,
    drive: &ProbeDrive,
    freq_trajectory: &[f64],
    dt: f64,
    initial: BlochState,
) -> Result<TransientResult> {
    let n = drive.envelope.len();
    if n != freq_trajectory.len() {
        return Err(Error::Usage(format!(
            "drive envelope has {n} samples but frequency trajectory has {}",
            freq_trajectory.len()
        )));
    }
    if n == 0 {
        return Err(Error::Usage("empty time grid".into()));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Usage(format!("dt must be finite and > 0, got {dt}")));
    }
    ensure_finite("omega_p", drive.omega_p)?;
    if drive.envelope.iter().chain(freq_trajectory).any(|v| !v.is_finite()) {
        return Err(Error::Domain("drive or trajectory contains non-finite samples".into()));
    }
    if drive.envelope.iter().any(|r| *r < 0.0) {
        return Err(Error::Domain("Rabi envelope must be non-negative".into()));
    }
    let required = max_stable_dt(params, drive, freq_trajectory);
    if dt > required {
        return Err(Error::Usage(format!(
            "dt = {dt:.3e} s violates the stability contract; need dt <= {required:.3e} s"
        )));
    }
    if !initial.is_physical() {
        return Err(Error::Domain("initial state lies outside the Bloch ball".into()));
    }

    let relax = params.relaxation();
    let gamma = params.decoherence();
    let wp = drive.omega_p;
    let env = &drive.envelope;

    let mut states = Vec::with_capacity(n);
    states.push(initial);
    let (mut s, mut z) = (initial.coherence, initial.inversion);
    for k in 0..n - 1 {
        let (d0, r0) = (wp - freq_trajectory[k], env[k]);
        let (dm, rm) = (wp - midpoint(freq_trajectory, k), midpoint(env, k));
        let (d1, r1) = (wp - freq_trajectory[k + 1], env[k + 1]);

        let k1 = bloch_rhs(relax, gamma, d0, r0, s, z);
        let k2 = bloch_rhs(relax, gamma, dm, rm, s + k1.ds * (0.5 * dt), z + 0.5 * dt * k1.dz);
        let k3 = bloch_rhs(relax, gamma, dm, rm, s + k2.ds * (0.5 * dt), z + 0.5 * dt * k2.dz);
        let k4 = bloch_rhs(relax, gamma, d1, r1, s + k3.ds * dt, z + dt * k3.dz);
        s += (k1.ds + k2.ds * 2.0 + k3.ds * 2.0 + k4.ds) * (dt / 6.0);
        z += dt / 6.0 * (k1.dz + 2.0 * k2.dz + 2.0 * k3.dz + k4.dz);

        let state = BlochState { coherence: s, inversion: z };
        if !state.is_physical() {
            return Err(Error::Domain(format!(
                "integration left the Bloch ball at sample {} (radius² = {})",
                k + 1,
                state.radius_sq()
            )));
        }
        states.push(state);
    }

    let mut v_in = Vec::with_capacity(n);
    let mut v3 = Vec::with_capacity(n);
    let mut v4 = Vec::with_capacity(n);
    let mut transmittance = Vec::with_capacity(n);
    let mut reflectance = Vec::with_capacity(n);
    for (state, rabi) in states.iter().zip(env) {
        let vin = drive.field_per_rabi * *rabi;
        let out4 = emitted_field(params, state.coherence) * drive.field_per_rabi;
        let out3 = vin + out4;
        let p_in = vin.norm_sqr();
        if p_in > 0.0 {
            transmittance.push(out3.norm_sqr() / p_in);
            reflectance.push(out4.norm_sqr() / p_in);
        } else {
            transmittance.push(1.0);
            reflectance.push(0.0);
        }
        v_in.push(vin);
        v3.push(out3);
        v4.push(out4);
    }

    Ok(TransientResult {
        times: (0..n).map(|k| k as f64 * dt).collect(),
        states,
        v_in,
        v3,
        v4,
        transmittance,
        reflectance,
    })
}

/// Continuous weak probe while a Gaussian-square flux pulse detunes the
/// qubit from its idle point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingProtocol {
    pub omega_p: f64,
    /// On-chip probe power, W.
    pub probe_power: f64,
    pub base_flux: f64,
    pub pulse: GaussianSquare,
    /// Step as a fraction of the stability limit.
    pub step_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingRun {
    pub dt: f64,
    pub pulse: FluxPulse,
    pub trajectory: Vec<f64>,
    pub result: TransientResult,
}

/// Extreme detuning reachable while the control voltage moves between 0
/// and `amplitude`.
fn extreme_detuning(spec: &TransmonSpec, omega_p: f64, base_flux: f64, amplitude: f64) -> Result<f64> {
    let a = base_flux;
    let b = base_flux + spec.flux_per_volt() * amplitude;
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut fluxes = vec![lo, hi];
    let mut m = lo.ceil();
    while m <= hi {
        fluxes.push(m);
        m += 1.0;
    }
    let mut worst = 0.0_f64;
    for f in fluxes {
        worst = worst.max((omega_p - spec.omega_at_flux(f)?).abs());
    }
    Ok(worst)
}

pub fn simulate_switching(
    params: &QubitParams,
    spec: &TransmonSpec,
    protocol: &SwitchingProtocol,
) -> Result<SwitchingRun> {
    if !(protocol.step_fraction > 0.0 && protocol.step_fraction <= 1.0) {
        return Err(Error::Usage("step_fraction must lie in (0, 1]".into()));
    }
    let rabi = crate::scattering::rabi_from_power(params, protocol.probe_power)?;
    let delta = extreme_detuning(spec, protocol.omega_p, protocol.base_flux, protocol.pulse.amplitude)?;
    let rate = params.relaxation().max(delta).max(rabi);
    let dt = protocol.step_fraction * STABILITY_LIMIT / rate;

    let pulse = protocol.pulse.sample(dt)?;
    let trajectory = spec.pulse_to_freq_trajectory(protocol.base_flux, &pulse)?;
    let drive = ProbeDrive::constant(params, protocol.omega_p, rabi, pulse.len());
    let initial = steady_state_at(params, protocol.omega_p - trajectory[0], rabi);
    let result = integrate_bloch(params, &drive, &trajectory, dt, initial)?;
    Ok(SwitchingRun { dt, pulse, trajectory, result })
}

/// One switching run per pulse amplitude, evaluated concurrently; output
/// order follows `amplitudes`.
pub fn switching_map(
    params: &QubitParams,
    spec: &TransmonSpec,
    protocol: &SwitchingProtocol,
    amplitudes: &[f64],
) -> Result<Vec<SwitchingRun>> {
    amplitudes
        .par_iter()
        .map(|&amp| {
            let mut p = *protocol;
            p.pulse.amplitude = amp;
            simulate_switching(params, spec, &p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::reflection_amplitude;
    use crate::units::ghz_to_angular;

    fn constant_run(p: &QubitParams, delta: f64, rabi: f64, duration: f64) -> TransientResult {
        let drive0 = ProbeDrive::constant(p, p.omega() + delta, rabi, 2);
        let dt = 0.5 * max_stable_dt(p, &drive0, &[p.omega(); 2]);
        let n = (duration / dt).ceil() as usize + 1;
        let drive = ProbeDrive::constant(p, p.omega() + delta, rabi, n);
        integrate_bloch(p, &drive, &vec![p.omega(); n], dt, BlochState::ground()).unwrap()
    }

    #[test]
    fn undriven_ground_state() {
        let p = QubitParams::reference();
        let s = bloch_steady_state(&p, &DriveCondition::weak(p.omega()).unwrap()).unwrap();
        assert_eq!(s, BlochState::ground());
        assert_eq!(reflection_from_state(&p, &s, 0.0), None);
    }

    #[test]
    fn half_saturation_steady_state() {
        let p = QubitParams::from_table(5.0, 10.0, 0.0, 0.0, 1.0).unwrap();
        let rabi = (p.decoherence() * p.relaxation()).sqrt();
        let s = bloch_steady_state(&p, &DriveCondition::new(p.omega(), rabi).unwrap()).unwrap();
        let r = reflection_from_state(&p, &s, rabi).unwrap();
        assert!((r.norm_sqr() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn steady_state_matches_closed_form() {
        let p = QubitParams::reference();
        let g = p.decoherence();
        for (x, w) in [(0.0, 1e-6), (0.3, 0.2), (-2.0, 3.0), (5.0, 0.01)] {
            let rabi = w * g;
            let s = steady_state_at(&p, x * g, rabi);
            let r = reflection_from_state(&p, &s, rabi).unwrap();
            assert!((r - reflection_amplitude(&p, x * g, rabi)).norm() < 1e-12);
            assert!(s.is_physical());
        }
    }

    #[test]
    fn zero_drive_stays_dark() {
        let p = QubitParams::reference();
        let n = 500;
        let traj: Vec<f64> = (0..n).map(|i| p.omega() + 1e6 * (i as f64 * 0.01).sin()).collect();
        let drive = ProbeDrive { omega_p: p.omega(), envelope: vec![0.0; n], field_per_rabi: Complex64::new(1.0, 0.0) };
        let res = integrate_bloch(&p, &drive, &traj, 1e-11, BlochState::ground()).unwrap();
        assert!(res.v4.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
        assert!(res.v3.iter().zip(&res.v_in).all(|(a, b)| a == b));
    }

    #[test]
    fn weak_constant_drive_converges() {
        let p = QubitParams::reference();
        let rabi = 1e-3 * p.decoherence();
        let res = constant_run(&p, 0.0, rabi, 40.0 / p.relaxation());
        let last = res.states.last().unwrap();
        let r = reflection_from_state(&p, last, rabi).unwrap();
        assert!((r - reflection_amplitude(&p, 0.0, rabi)).norm() < 1e-6);
    }

    #[test]
    fn grid_and_step_checks() {
        let p = QubitParams::reference();
        let drive = ProbeDrive::constant(&p, p.omega(), 0.0, 10);
        let err = integrate_bloch(&p, &drive, &[p.omega(); 9], 1e-12, BlochState::ground()).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        let err = integrate_bloch(&p, &drive, &[p.omega(); 10], 1e-6, BlochState::ground()).unwrap_err();
        assert!(matches!(err, Error::Usage(ref m) if m.contains("need dt")));
    }

    #[test]
    fn midpoint_interpolation_is_exact_for_cubics() {
        let f: Vec<f64> = (0..6).map(|i| {
            let x = i as f64;
            1.0 - 2.0 * x + 0.5 * x * x - 0.1 * x * x * x
        }).collect();
        let g = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x - 0.1 * x * x * x;
        for i in 1..4 {
            assert!((midpoint(&f, i) - g(i as f64 + 0.5)).abs() < 1e-12);
        }
        // quadratic ends
        let q: Vec<f64> = (0..4).map(|i| (i * i) as f64).collect();
        assert!((midpoint(&q, 0) - 0.25).abs() < 1e-12);
        assert!((midpoint(&q, 2) - 6.25).abs() < 1e-12);
    }

    #[test]
    fn switching_plateau_and_recovery() {
        let params = QubitParams::reference();
        let spec = TransmonSpec::reference();
        let protocol = SwitchingProtocol {
            omega_p: ghz_to_angular(4.1108),
            probe_power: crate::units::dbm_to_watts(-158.98),
            base_flux: spec.flux_offset(),
            pulse: GaussianSquare { amplitude: 0.220, plateau: 200e-9, rise_sigma: 5e-9, lead: 50e-9, tail: 150e-9 },
            step_fraction: 0.8,
        };
        let run = simulate_switching(&params, &spec, &protocol).unwrap();
        let (t, r) = run
            .result
            .window_mean(protocol.pulse.plateau_start() + 100e-9, protocol.pulse.plateau_end())
            .unwrap();
        assert!((t - 0.4436).abs() < 0.01, "T = {t}");
        assert!((r - 0.5676).abs() < 0.01, "R = {r}");
        assert!(*run.result.transmittance.first().unwrap() > 0.97);
        assert!(*run.result.transmittance.last().unwrap() > 0.97);
    }

    #[test]
    fn csv_columns() {
        let p = QubitParams::reference();
        let res = constant_run(&p, 0.0, 1e-3 * p.decoherence(), 1e-9);
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time_ns,re_sm,im_sm,sz,T,R,re_V3,im_V3,re_V4,im_V4\n"));
        assert_eq!(text.lines().count(), res.len() + 1);
    }
}
