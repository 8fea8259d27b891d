//! Device configuration: one TOML file per device, sections mirroring the
//! characterization tables.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wqed_core::interferometer::{CombinerFixture, Leakage, PortField, ScatterMatrix2};
use wqed_core::scattering::waveguide_rabi_constant;
use wqed_core::units::{ghz_to_angular, mhz_to_angular};
use wqed_core::{QubitParams, TransmonSpec};

use crate::error::{CliError, CliResult};

pub const CONFIG_ENV: &str = "WQED_CONFIG";

const NANOVOLT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub qubit: QubitSection,
    pub transmon: TransmonSection,
    pub probe: ProbeSection,
    pub line: LineSection,
    #[serde(default)]
    pub leakage: LeakageSection,
}

/// Table-unit qubit parameters. `k` defaults to the 1D-waveguide value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSection {
    pub omega_ghz: f64,
    pub gamma_mhz: f64,
    pub gamma_n_mhz: f64,
    pub phi_rad: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

/// Either the flux mapping directly (`flux_per_volt`, `flux_offset`) or a
/// two-point voltage calibration (`idle_ghz` at 0 V, `target_ghz` at
/// `target_volts`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonSection {
    pub ej_ghz: f64,
    pub ec_mhz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux_per_volt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux_offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idle_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_volts: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub omega_ghz: f64,
    /// On-chip probe power for time-domain runs, W.
    pub power_w: f64,
}

/// Measured combiner matrix and input amplitudes at its working point.
/// Complex values are `[re, im]`; amplitudes in nV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSection {
    pub qubit_ghz: f64,
    pub t_l: [f64; 2],
    pub r_r: [f64; 2],
    pub r_l: [f64; 2],
    pub t_r: [f64; 2],
    pub v1_nv: [f64; 2],
    pub v2_nv: [f64; 2],
    pub theta0_rad: f64,
}

/// Constant offsets added to the outputs, nV.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeakageSection {
    #[serde(default)]
    pub v3_nv: [f64; 2],
    #[serde(default)]
    pub v4_nv: [f64; 2],
}

fn c(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

impl Default for DeviceConfig {
    fn default() -> Self {
        let fx = CombinerFixture::reference();
        Self {
            qubit: QubitSection {
                omega_ghz: QubitParams::REFERENCE_OMEGA_GHZ,
                gamma_mhz: QubitParams::REFERENCE_GAMMA_MHZ,
                gamma_n_mhz: QubitParams::REFERENCE_GAMMA_N_MHZ,
                phi_rad: QubitParams::REFERENCE_PHI,
                k: None,
            },
            transmon: TransmonSection {
                ej_ghz: TransmonSpec::REFERENCE_EJ_GHZ,
                ec_mhz: TransmonSpec::REFERENCE_EC_MHZ,
                flux_per_volt: None,
                flux_offset: None,
                idle_ghz: Some(TransmonSpec::IDLE_FREQ_HZ / 1e9),
                target_ghz: Some(TransmonSpec::SPLIT_FREQ_HZ / 1e9),
                target_volts: Some(TransmonSpec::SPLIT_VOLTAGE),
            },
            probe: ProbeSection { omega_ghz: QubitParams::REFERENCE_OMEGA_GHZ, power_w: 1e-19 },
            line: LineSection {
                qubit_ghz: TransmonSpec::SPLIT_FREQ_HZ / 1e9,
                t_l: pair(fx.matrix.t_l),
                r_r: pair(fx.matrix.r_r),
                r_l: pair(fx.matrix.r_l),
                t_r: pair(fx.matrix.t_r),
                v1_nv: pair(fx.v1.amplitude / NANOVOLT),
                v2_nv: pair(fx.v2.amplitude / NANOVOLT),
                theta0_rad: fx.v1.phase_offset,
            },
            leakage: LeakageSection::default(),
        }
    }
}

impl DeviceConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Explicit path, else the environment variable, else built-in defaults.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::io(format!("reading config {}", p.display()), e))?;
                Self::from_toml(&text).map_err(|e| match e {
                    CliError::Config(m) => CliError::Config(format!("{}: {m}", p.display())),
                    other => other,
                })
            }
            None => Ok(Self::default()),
        }
    }

    fn validate(&self) -> CliResult<()> {
        self.qubit_params()?;
        self.transmon_spec()?;
        self.fixture()?;
        Ok(())
    }

    pub fn qubit_params(&self) -> CliResult<QubitParams> {
        let q = &self.qubit;
        let k = q
            .k
            .unwrap_or_else(|| waveguide_rabi_constant(mhz_to_angular(q.gamma_mhz), ghz_to_angular(q.omega_ghz)));
        Ok(QubitParams::from_table(q.omega_ghz, q.gamma_mhz, q.gamma_n_mhz, q.phi_rad, k)?)
    }

    pub fn transmon_spec(&self) -> CliResult<TransmonSpec> {
        let t = &self.transmon;
        let (ej, ec) = (t.ej_ghz * 1e9, t.ec_mhz * 1e6);
        match (t.flux_per_volt, t.flux_offset, t.idle_ghz, t.target_ghz, t.target_volts) {
            (Some(fpv), Some(off), None, None, None) => Ok(TransmonSpec::new(ej, ec, fpv, off)?),
            (None, None, Some(idle), Some(target), Some(volts)) => {
                Ok(TransmonSpec::calibrated(ej, ec, idle * 1e9, target * 1e9, volts)?)
            }
            _ => Err(CliError::Config(
                "[transmon] needs either flux_per_volt + flux_offset or idle_ghz + target_ghz + target_volts".into(),
            )),
        }
    }

    pub fn probe_omega(&self) -> f64 {
        ghz_to_angular(self.probe.omega_ghz)
    }

    pub fn fixture(&self) -> CliResult<CombinerFixture> {
        let l = &self.line;
        Ok(CombinerFixture {
            matrix: ScatterMatrix2 { t_l: c(l.t_l), r_r: c(l.r_r), r_l: c(l.r_l), t_r: c(l.t_r) },
            v1: PortField::new(c(l.v1_nv) * NANOVOLT, l.theta0_rad)?,
            v2: PortField::new(c(l.v2_nv) * NANOVOLT, 0.0)?,
        })
    }

    pub fn leakage(&self) -> Leakage {
        Leakage { v3: c(self.leakage.v3_nv) * NANOVOLT, v4: c(self.leakage.v4_nv) * NANOVOLT }
    }

    /// SHA-256 over the canonical JSON form, so formatting and comments in
    /// the file do not change the hash.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matches_reference_device() {
        let cfg = DeviceConfig::default();
        assert_eq!(cfg.qubit_params().unwrap(), QubitParams::reference());
        assert_eq!(cfg.transmon_spec().unwrap(), TransmonSpec::reference());
        assert_eq!(cfg.fixture().unwrap(), CombinerFixture::reference());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = DeviceConfig::default();
        assert_eq!(DeviceConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = DeviceConfig::default().to_toml().replace("[probe]", "[probe]\nbogus = 1");
        assert!(matches!(DeviceConfig::from_toml(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn mixed_transmon_modes_rejected() {
        let mut cfg = DeviceConfig::default();
        cfg.transmon.flux_offset = Some(0.3);
        assert!(cfg.transmon_spec().is_err());
    }
}
