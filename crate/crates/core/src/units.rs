//! Conversions between table units (GHz, MHz, dBm) and the angular SI units
//! used everywhere else.

use std::f64::consts::TAU;

pub const HBAR: f64 = 1.054_571_817e-34;

/// Characteristic line impedance used to turn on-chip amplitudes into power.
pub const LINE_IMPEDANCE_OHM: f64 = 50.0;

pub fn ghz_to_angular(ghz: f64) -> f64 {
    ghz * 1e9 * TAU
}

pub fn mhz_to_angular(mhz: f64) -> f64 {
    mhz * 1e6 * TAU
}

pub fn angular_to_ghz(w: f64) -> f64 {
    w / TAU / 1e9
}

pub fn angular_to_mhz(w: f64) -> f64 {
    w / TAU / 1e6
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

pub fn db_to_power_ratio(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn power_ratio_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

pub fn db_to_amplitude_ratio(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Average power carried by a complex (peak) amplitude on a matched line.
pub fn amplitude_to_power(amplitude_v: f64) -> f64 {
    amplitude_v * amplitude_v / (2.0 * LINE_IMPEDANCE_OHM)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        assert!((angular_to_ghz(ghz_to_angular(4.1108)) - 4.1108).abs() < 1e-14);
        assert!((angular_to_mhz(mhz_to_angular(22.15)) - 22.15).abs() < 1e-12);
        assert!((watts_to_dbm(dbm_to_watts(-158.98)) + 158.98).abs() < 1e-9);
        assert!((power_ratio_to_db(db_to_power_ratio(45.0)) - 45.0).abs() < 1e-12);
        assert!((db_to_amplitude_ratio(20.0) - 10.0).abs() < 1e-12);
    }
}
