//! Flux dispersion of a SQUID-tunable transmon and the mapping from control
//! voltage (static bias and fast pulses) to the qubit transition frequency.
//!
//! Uses the asymptotic transmon result `f(Φ) = √(8 E_J E_C |cos πΦ|) − E_C`,
//! energies in frequency units (E/h, Hz) and flux in units of Φ₀.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

const MIN_TRANSMON_RATIO: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransmonRecord", into = "TransmonRecord")]
pub struct TransmonSpec {
    josephson_hz: f64,
    charging_hz: f64,
    flux_per_volt: f64,
    flux_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonRecord {
    pub ej_ghz: f64,
    pub ec_mhz: f64,
    /// Φ₀ per volt of control voltage.
    pub flux_per_volt: f64,
    /// Flux (Φ₀) at zero control voltage.
    pub flux_offset: f64,
}

impl TransmonSpec {
    pub const REFERENCE_EJ_GHZ: f64 = 25.57;
    pub const REFERENCE_EC_MHZ: f64 = 199.4;
    /// Static bias point of the switching experiment.
    pub const IDLE_FREQ_HZ: f64 = 4.2108e9;
    /// Frequency reached on the pulse plateau at the calibration voltage.
    pub const SPLIT_FREQ_HZ: f64 = 4.12e9;
    pub const SPLIT_VOLTAGE: f64 = 0.220;

    pub fn new(josephson_hz: f64, charging_hz: f64, flux_per_volt: f64, flux_offset: f64) -> Result<Self> {
        for (name, v) in [
            ("E_J", josephson_hz),
            ("E_C", charging_hz),
            ("flux_per_volt", flux_per_volt),
            ("flux_offset", flux_offset),
        ] {
            ensure_finite(name, v)?;
        }
        if josephson_hz <= 0.0 || charging_hz <= 0.0 {
            return Err(Error::Domain("E_J and E_C must be positive".into()));
        }
        if josephson_hz / charging_hz <= MIN_TRANSMON_RATIO {
            return Err(Error::Domain(format!(
                "E_J/E_C = {:.2} is outside the transmon regime (> {MIN_TRANSMON_RATIO})",
                josephson_hz / charging_hz
            )));
        }
        if flux_per_volt == 0.0 {
            return Err(Error::Domain("flux_per_volt must be nonzero".into()));
        }
        Ok(Self { josephson_hz, charging_hz, flux_per_volt, flux_offset })
    }

    /// Energies given; `flux_offset` and `flux_per_volt` chosen so that zero
    /// volts sits at `idle_hz` and `volts` moves the qubit to `target_hz`.
    pub fn calibrated(
        josephson_hz: f64,
        charging_hz: f64,
        idle_hz: f64,
        target_hz: f64,
        volts: f64,
    ) -> Result<Self> {
        let bare = Self::new(josephson_hz, charging_hz, 1.0, 0.0)?;
        let offset = bare.flux_for_freq(idle_hz)?;
        let target = bare.flux_for_freq(target_hz)?;
        ensure_finite("calibration voltage", volts)?;
        if volts == 0.0 {
            return Err(Error::Domain("calibration voltage must be nonzero".into()));
        }
        Self::new(josephson_hz, charging_hz, (target - offset) / volts, offset)
    }

    /// E_J/h = 25.57 GHz, E_C/h = 199.4 MHz, idle at 4.2108 GHz and
    /// 220 mV reaching 4.12 GHz.
    pub fn reference() -> Self {
        Self::calibrated(
            Self::REFERENCE_EJ_GHZ * 1e9,
            Self::REFERENCE_EC_MHZ * 1e6,
            Self::IDLE_FREQ_HZ,
            Self::SPLIT_FREQ_HZ,
            Self::SPLIT_VOLTAGE,
        )
        .expect("reference transmon is valid")
    }

    pub fn josephson_hz(&self) -> f64 {
        self.josephson_hz
    }

    pub fn charging_hz(&self) -> f64 {
        self.charging_hz
    }

    pub fn flux_per_volt(&self) -> f64 {
        self.flux_per_volt
    }

    pub fn flux_offset(&self) -> f64 {
        self.flux_offset
    }

    /// Static flux for a DC control voltage.
    pub fn flux_at_voltage(&self, volts: f64) -> f64 {
        self.flux_offset + self.flux_per_volt * volts
    }

    /// Sweet-spot (zero flux) frequency, Hz.
    pub fn max_freq(&self) -> f64 {
        (8.0 * self.josephson_hz * self.charging_hz).sqrt() - self.charging_hz
    }

    /// Largest |cos πΦ| floor below which the formula gives f ≤ 0.
    fn cos_floor(&self) -> f64 {
        self.charging_hz / (8.0 * self.josephson_hz)
    }

    /// Qubit frequency ω/2π in Hz.
    pub fn freq_at_flux(&self, flux: f64) -> Result<f64> {
        ensure_finite("flux", flux)?;
        let c = (PI * flux).cos().abs();
        if c <= self.cos_floor() {
            return Err(Error::Domain(format!(
                "frequency out of transmon-dispersion validity at flux {flux} Phi0"
            )));
        }
        Ok((8.0 * self.josephson_hz * self.charging_hz * c).sqrt() - self.charging_hz)
    }

    /// Angular qubit frequency, rad/s.
    pub fn omega_at_flux(&self, flux: f64) -> Result<f64> {
        Ok(TAU * self.freq_at_flux(flux)?)
    }

    /// Principal-branch flux in [0, 0.5) giving `target_hz`, by bisection.
    pub fn flux_for_freq(&self, target_hz: f64) -> Result<f64> {
        ensure_finite("target frequency", target_hz)?;
        let f_max = self.max_freq();
        if target_hz <= 0.0 || target_hz > f_max {
            return Err(Error::Domain(format!(
                "target {target_hz:.6e} Hz unreachable; achievable range is (0, {f_max:.6e}] Hz"
            )));
        }
        if target_hz == f_max {
            return Ok(0.0);
        }
        // freq is strictly decreasing on [0, edge), edge where freq hits 0
        let mut lo = 0.0_f64;
        let mut hi = self.cos_floor().acos() / PI;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match self.freq_at_flux(mid) {
                Ok(f) if f > target_hz => lo = mid,
                Ok(f) if f == target_hz => return Ok(mid),
                _ => hi = mid,
            }
        }
        let f_lo = self.freq_at_flux(lo)?;
        let f_hi = self.freq_at_flux(hi).unwrap_or(0.0);
        let best = if (f_lo - target_hz).abs() <= (f_hi - target_hz).abs() { lo } else { hi };
        let f_best = self.freq_at_flux(best)?;
        if (f_best - target_hz).abs() > 1.0 {
            return Err(Error::Domain(format!(
                "bisection did not reach 1 Hz tolerance (residual {:.3e} Hz)",
                f_best - target_hz
            )));
        }
        Ok(best)
    }

    /// Sample-wise angular qubit frequency under a flux pulse on top of
    /// `base_flux`.
    pub fn pulse_to_freq_trajectory(&self, base_flux: f64, pulse: &FluxPulse) -> Result<Vec<f64>> {
        ensure_finite("base flux", base_flux)?;
        pulse
            .samples()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let flux = base_flux + self.flux_per_volt * v;
                self.omega_at_flux(flux).map_err(|_| {
                    Error::Domain(format!(
                        "flux pulse sample {i} (V = {v} V, flux = {flux} Phi0) is outside transmon-dispersion validity"
                    ))
                })
            })
            .collect()
    }
}

impl TryFrom<TransmonRecord> for TransmonSpec {
    type Error = Error;

    fn try_from(rec: TransmonRecord) -> Result<Self> {
        Self::new(rec.ej_ghz * 1e9, rec.ec_mhz * 1e6, rec.flux_per_volt, rec.flux_offset)
    }
}

impl From<TransmonSpec> for TransmonRecord {
    fn from(s: TransmonSpec) -> Self {
        Self {
            ej_ghz: s.josephson_hz / 1e9,
            ec_mhz: s.charging_hz / 1e6,
            flux_per_volt: s.flux_per_volt,
            flux_offset: s.flux_offset,
        }
    }
}

/// Control-voltage waveform on a uniform grid starting at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxPulse {
    samples: Vec<f64>,
    dt: f64,
}

/// Gaussian-edged square pulse layout. Times in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSquare {
    pub amplitude: f64,
    pub plateau: f64,
    pub rise_sigma: f64,
    /// Idle time before the rising edge starts.
    pub lead: f64,
    /// Idle time after the falling edge ends.
    pub tail: f64,
}

/// Edges are truncated at this many σ and shifted so they start at zero.
const EDGE_SIGMAS: f64 = 4.0;

impl GaussianSquare {
    pub fn duration(&self) -> f64 {
        self.lead + 2.0 * EDGE_SIGMAS * self.rise_sigma + self.plateau + self.tail
    }

    pub fn plateau_start(&self) -> f64 {
        self.lead + EDGE_SIGMAS * self.rise_sigma
    }

    pub fn plateau_end(&self) -> f64 {
        self.plateau_start() + self.plateau
    }

    /// Normalized envelope in [0, 1].
    pub fn envelope(&self, t: f64) -> f64 {
        let (t1, t2) = (self.plateau_start(), self.plateau_end());
        if self.rise_sigma == 0.0 {
            return if (t1..=t2).contains(&t) { 1.0 } else { 0.0 };
        }
        let edge = |d: f64| {
            let floor = (-0.5 * EDGE_SIGMAS * EDGE_SIGMAS).exp();
            let g = (-0.5 * (d / self.rise_sigma).powi(2)).exp();
            ((g - floor) / (1.0 - floor)).max(0.0)
        };
        if t < t1 {
            edge(t1 - t)
        } else if t <= t2 {
            1.0
        } else {
            edge(t - t2)
        }
    }

    pub fn sample(&self, dt: f64) -> Result<FluxPulse> {
        for (name, v) in [
            ("amplitude", self.amplitude),
            ("plateau", self.plateau),
            ("rise", self.rise_sigma),
            ("lead", self.lead),
            ("tail", self.tail),
        ] {
            ensure_finite(name, v)?;
        }
        if self.plateau < 0.0 || self.rise_sigma < 0.0 || self.lead < 0.0 || self.tail < 0.0 {
            return Err(Error::Usage("pulse durations must be non-negative".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::Usage(format!("dt must be > 0, got {dt}")));
        }
        let n = (self.duration() / dt).round() as usize + 1;
        let samples = (0..n).map(|i| self.amplitude * self.envelope(i as f64 * dt)).collect();
        FluxPulse::new(samples, dt)
    }
}

impl FluxPulse {
    pub fn new(samples: Vec<f64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Usage(format!("dt must be finite and > 0, got {dt}")));
        }
        if samples.len() < 2 {
            return Err(Error::Usage("a flux pulse needs at least 2 samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("flux pulse contains non-finite samples".into()));
        }
        Ok(Self { samples, dt })
    }

    pub fn zeros(len: usize, dt: f64) -> Result<Self> {
        Self::new(vec![0.0; len], dt)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |i| i as f64 * self.dt)
    }
}
