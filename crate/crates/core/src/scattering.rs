//! Closed-form elastic scattering of a coherent probe by a two-level atom in
//! an open waveguide.
//!
//! ```text
//! r = -e^{iφ} (Γ/2γ) (1 - iδ/γ) / (1 + (δ/γ)² + Ω²/(γΓ)),   t = 1 + r
//! ```
//! with `δ = ω_p - ω` and `γ = Γ/2 + Γⁿ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::units::{angular_to_ghz, angular_to_mhz, ghz_to_angular, mhz_to_angular, HBAR};

/// Scattering parameters of the atom. `γ` is derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QubitParamsRecord", into = "QubitParamsRecord")]
pub struct QubitParams {
    omega: f64,
    relaxation: f64,
    nonradiative: f64,
    phi: f64,
    rabi_sq_per_watt: f64,
}

/// Flat on-disk form, in table units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitParamsRecord {
    pub omega_ghz: f64,
    pub gamma_mhz: f64,
    pub gamma_n_mhz: f64,
    pub phi_rad: f64,
    /// Ω² per watt of on-chip probe power, (rad/s)²/W.
    pub k: f64,
}

impl QubitParams {
    /// Reference device: ω/2π = 4.1108 GHz, Γ/2π = 22.15 MHz,
    /// Γⁿ/2π = 0.39 MHz, φ = 0.0526 rad.
    pub const REFERENCE_OMEGA_GHZ: f64 = 4.1108;
    pub const REFERENCE_GAMMA_MHZ: f64 = 22.15;
    pub const REFERENCE_GAMMA_N_MHZ: f64 = 0.39;
    pub const REFERENCE_PHI: f64 = 0.0526;

    pub fn new(
        omega: f64,
        relaxation: f64,
        nonradiative: f64,
        phi: f64,
        rabi_sq_per_watt: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("omega", omega),
            ("Gamma", relaxation),
            ("Gamma_n", nonradiative),
            ("phi", phi),
            ("k", rabi_sq_per_watt),
        ] {
            ensure_finite(name, v)?;
        }
        if relaxation <= 0.0 {
            return Err(Error::Domain(format!("Gamma must be > 0, got {relaxation}")));
        }
        if nonradiative < 0.0 {
            return Err(Error::Domain(format!("Gamma_n must be >= 0, got {nonradiative}")));
        }
        if !(phi > -PI && phi <= PI) {
            return Err(Error::Domain(format!("phi must lie in (-pi, pi], got {phi}")));
        }
        if rabi_sq_per_watt <= 0.0 {
            return Err(Error::Domain(format!("k must be > 0, got {rabi_sq_per_watt}")));
        }
        Ok(Self { omega, relaxation, nonradiative, phi, rabi_sq_per_watt })
    }

    /// Builds parameters from table units (GHz, MHz).
    pub fn from_table(
        omega_ghz: f64,
        gamma_mhz: f64,
        gamma_n_mhz: f64,
        phi_rad: f64,
        k: f64,
    ) -> Result<Self> {
        Self::new(
            ghz_to_angular(omega_ghz),
            mhz_to_angular(gamma_mhz),
            mhz_to_angular(gamma_n_mhz),
            phi_rad,
            k,
        )
    }

    /// The characterized device, with `k` from the 1D-waveguide relation
    /// `Ω² = 2ΓP/(ħω)`.
    pub fn reference() -> Self {
        let omega = ghz_to_angular(Self::REFERENCE_OMEGA_GHZ);
        let gamma = mhz_to_angular(Self::REFERENCE_GAMMA_MHZ);
        Self::new(
            omega,
            gamma,
            mhz_to_angular(Self::REFERENCE_GAMMA_N_MHZ),
            Self::REFERENCE_PHI,
            waveguide_rabi_constant(gamma, omega),
        )
        .expect("reference parameters are valid")
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Radiative relaxation rate Γ.
    pub fn relaxation(&self) -> f64 {
        self.relaxation
    }

    /// Non-radiative decoherence rate Γⁿ.
    pub fn nonradiative(&self) -> f64 {
        self.nonradiative
    }

    /// Total decoherence rate γ = Γ/2 + Γⁿ.
    pub fn decoherence(&self) -> f64 {
        self.relaxation / 2.0 + self.nonradiative
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn k(&self) -> f64 {
        self.rabi_sq_per_watt
    }

    pub fn with_omega(self, omega: f64) -> Result<Self> {
        Self::new(omega, self.relaxation, self.nonradiative, self.phi, self.rabi_sq_per_watt)
    }

    pub fn with_phi(self, phi: f64) -> Result<Self> {
        Self::new(self.omega, self.relaxation, self.nonradiative, phi, self.rabi_sq_per_watt)
    }

    pub fn with_k(self, k: f64) -> Result<Self> {
        Self::new(self.omega, self.relaxation, self.nonradiative, self.phi, k)
    }

    pub fn with_nonradiative(self, nonradiative: f64) -> Result<Self> {
        Self::new(self.omega, self.relaxation, nonradiative, self.phi, self.rabi_sq_per_watt)
    }

    /// Resonant weak-drive reflection amplitude Γ/2γ.
    pub fn max_reflection(&self) -> f64 {
        self.relaxation / (2.0 * self.decoherence())
    }

    /// On-chip power at which Ω² = γΓ.
    pub fn half_saturation_power(&self) -> f64 {
        self.decoherence() * self.relaxation / self.rabi_sq_per_watt
    }
}

impl TryFrom<QubitParamsRecord> for QubitParams {
    type Error = Error;

    fn try_from(rec: QubitParamsRecord) -> Result<Self> {
        Self::from_table(rec.omega_ghz, rec.gamma_mhz, rec.gamma_n_mhz, rec.phi_rad, rec.k)
    }
}

impl From<QubitParams> for QubitParamsRecord {
    fn from(p: QubitParams) -> Self {
        Self {
            omega_ghz: angular_to_ghz(p.omega),
            gamma_mhz: angular_to_mhz(p.relaxation),
            gamma_n_mhz: angular_to_mhz(p.nonradiative),
            phi_rad: p.phi,
            k: p.rabi_sq_per_watt,
        }
    }
}

/// `Ω² = 2ΓP/(ħω)` for an emitter radiating symmetrically into a 1D line.
pub fn waveguide_rabi_constant(relaxation: f64, omega: f64) -> f64 {
    2.0 * relaxation / (HBAR * omega)
}

/// Probe frequency and Rabi strength. Detuning is always computed against a
/// [`QubitParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveCondition {
    pub omega_p: f64,
    pub rabi: f64,
}

impl DriveCondition {
    pub fn new(omega_p: f64, rabi: f64) -> Result<Self> {
        ensure_finite("omega_p", omega_p)?;
        ensure_finite("Omega", rabi)?;
        if rabi < 0.0 {
            return Err(Error::Domain(format!("Rabi frequency must be >= 0, got {rabi}")));
        }
        Ok(Self { omega_p, rabi })
    }

    /// Weak (Ω → 0) probe.
    pub fn weak(omega_p: f64) -> Result<Self> {
        Self::new(omega_p, 0.0)
    }

    pub fn detuning(&self, params: &QubitParams) -> f64 {
        self.omega_p - params.omega()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficients {
    pub r: Complex64,
    pub t: Complex64,
    pub transmittance: f64,
    pub reflectance: f64,
    /// T + R; never clamped, may exceed 1 when φ ≠ 0.
    pub sum: f64,
}

impl Coefficients {
    pub fn from_reflection(r: Complex64) -> Self {
        let t = Complex64::new(1.0, 0.0) + r;
        let transmittance = t.norm_sqr();
        let reflectance = r.norm_sqr();
        Self { r, t, transmittance, reflectance, sum: transmittance + reflectance }
    }
}

/// Reflection amplitude at detuning `delta` and Rabi frequency `rabi`.
/// No validation; callers hold valid parameters.
pub fn reflection_amplitude(params: &QubitParams, delta: f64, rabi: f64) -> Complex64 {
    let gamma = params.decoherence();
    let x = delta / gamma;
    let denom = 1.0 + x * x + rabi * rabi / (gamma * params.relaxation());
    let lineshape = Complex64::new(1.0, -x) / denom;
    -Complex64::from_polar(params.max_reflection(), params.phi()) * lineshape
}

pub fn reflection(params: &QubitParams, drive: &DriveCondition) -> Result<Coefficients> {
    ensure_finite("omega_p", drive.omega_p)?;
    ensure_finite("Omega", drive.rabi)?;
    let r = reflection_amplitude(params, drive.detuning(params), drive.rabi);
    Ok(Coefficients::from_reflection(r))
}

/// Ω = √(k·P) for on-chip probe power `power` in watts.
pub fn rabi_from_power(params: &QubitParams, power: f64) -> Result<f64> {
    ensure_finite("power", power)?;
    if power < 0.0 {
        return Err(Error::Domain(format!("probe power must be >= 0, got {power}")));
    }
    Ok((params.k() * power).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetuningSweep {
    /// Qubit angular frequencies, same order as the input grid.
    pub qubit_omega: Vec<f64>,
    pub points: Vec<Coefficients>,
}

/// Evaluates the coefficients while the qubit frequency is swept and the
/// probe stays fixed.
pub fn detuning_sweep(
    params: &QubitParams,
    omega_p: f64,
    rabi: f64,
    omega_grid: &[f64],
) -> Result<DetuningSweep> {
    if omega_grid.is_empty() {
        return Err(Error::Usage("qubit frequency grid is empty".into()));
    }
    DriveCondition::new(omega_p, rabi)?;
    for w in omega_grid {
        ensure_finite("qubit frequency", *w)?;
    }
    if omega_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Usage("qubit frequency grid must be sorted ascending".into()));
    }
    let points = omega_grid
        .par_iter()
        .map(|&w| Coefficients::from_reflection(reflection_amplitude(params, omega_p - w, rabi)))
        .collect();
    Ok(DetuningSweep { qubit_omega: omega_grid.to_vec(), points })
}
