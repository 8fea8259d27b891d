//! Two-input beam combining through the 2×2 scattering relation
//!
//! ```text
//! V₃ = t_L V₁ + r_R V₂,   V₄ = r_L V₁ + t_R V₂,   V₁ = V₁,off e^{i(θ+θ₀)}
//! ```
//!
//! in the frame rotating at the probe carrier.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::scattering::{reflection_amplitude, QubitParams};
use crate::units::LINE_IMPEDANCE_OHM;

const NANOVOLT: f64 = 1e-9;

/// An input port: on-chip amplitude (V) and a fixed phase offset θ₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortField {
    pub amplitude: Complex64,
    pub phase_offset: f64,
}

impl PortField {
    pub fn new(amplitude: Complex64, phase_offset: f64) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::Domain("port amplitude must be finite".into()));
        }
        ensure_finite("phase offset", phase_offset)?;
        Ok(Self { amplitude, phase_offset })
    }

    /// Field with the scan phase applied.
    pub fn at(&self, theta: f64) -> Complex64 {
        self.amplitude * Complex64::from_polar(1.0, theta + self.phase_offset)
    }

    /// Same port with its power changed by `db`.
    pub fn scaled_db(&self, db: f64) -> Self {
        Self { amplitude: self.amplitude * 10f64.powf(db / 20.0), ..*self }
    }

    pub fn power(&self) -> f64 {
        crate::units::amplitude_to_power(self.amplitude.norm())
    }
}

/// Elements of the 2×2 relation, with any line phases embedded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterMatrix2 {
    pub t_l: Complex64,
    pub r_r: Complex64,
    pub r_l: Complex64,
    pub t_r: Complex64,
}

impl ScatterMatrix2 {
    /// Far-detuned atom: inputs pass straight through.
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self { t_l: one, r_r: zero, r_l: zero, t_r: one }
    }

    pub fn apply(&self, v1: Complex64, v2: Complex64) -> (Complex64, Complex64) {
        (self.t_l * v1 + self.r_r * v2, self.r_l * v1 + self.t_r * v2)
    }
}

/// Calibrated working point of the combiner experiment: qubit at 4.12 GHz,
/// probe at 4.1108 GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinerFixture {
    pub matrix: ScatterMatrix2,
    pub v1: PortField,
    pub v2: PortField,
}

impl CombinerFixture {
    pub fn reference() -> Self {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        Self {
            matrix: ScatterMatrix2 {
                t_l: c(0.674, 0.241),
                r_r: c(-0.387, 0.577),
                r_l: c(-0.707, 0.203),
                t_r: c(-0.010, 0.730),
            },
            v1: PortField { amplitude: c(4.261, 1.129) * NANOVOLT, phase_offset: 1.152 },
            v2: PortField { amplitude: c(2.182, 3.634) * NANOVOLT, phase_offset: 0.0 },
        }
    }
}

/// Per-path factors relating the intrinsic (t, r) of the atom to the
/// measured matrix: `t_L = left_transmit·t`, `r_R = right_reflect·r`,
/// `r_L = left_reflect·r`, `t_R = right_transmit·t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineCalibration {
    pub left_transmit: Complex64,
    pub right_reflect: Complex64,
    pub left_reflect: Complex64,
    pub right_transmit: Complex64,
}

impl LineCalibration {
    pub fn new(
        left_transmit: Complex64,
        right_reflect: Complex64,
        left_reflect: Complex64,
        right_transmit: Complex64,
    ) -> Result<Self> {
        let cal = Self { left_transmit, right_reflect, left_reflect, right_transmit };
        if cal.factors().iter().any(|f| *f == Complex64::new(0.0, 0.0) || !f.is_finite()) {
            return Err(Error::Domain("line calibration factors must be finite and nonzero".into()));
        }
        Ok(cal)
    }

    pub fn unity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self { left_transmit: one, right_reflect: one, left_reflect: one, right_transmit: one }
    }

    fn factors(&self) -> [Complex64; 4] {
        [self.left_transmit, self.right_reflect, self.left_reflect, self.right_transmit]
    }

    /// Least-squares factors mapping the weak-drive intrinsic (t, r) at
    /// `omega_p` onto `matrix`. With one matrix the system is square, so
    /// the solution is the element-wise ratio.
    pub fn fit(matrix: &ScatterMatrix2, params: &QubitParams, omega_p: f64) -> Result<Self> {
        let r = reflection_amplitude(params, omega_p - params.omega(), 0.0);
        let t = Complex64::new(1.0, 0.0) + r;
        if r.norm() < 1e-15 || t.norm() < 1e-15 {
            return Err(Error::Domain(
                "intrinsic t or r vanishes at this working point; line factors undefined".into(),
            ));
        }
        Self::new(matrix.t_l / t, matrix.r_r / r, matrix.r_l / r, matrix.t_r / t)
    }

    pub fn matrix(&self, t: Complex64, r: Complex64) -> ScatterMatrix2 {
        ScatterMatrix2 {
            t_l: self.left_transmit * t,
            r_r: self.right_reflect * r,
            r_l: self.left_reflect * r,
            t_r: self.right_transmit * t,
        }
    }
}

/// Constant offsets added to each output after scattering (imperfect
/// circulator isolation).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Leakage {
    pub v3: Complex64,
    pub v4: Complex64,
}

pub fn combine(matrix: &ScatterMatrix2, v1: &PortField, v2: &PortField, theta: f64) -> (Complex64, Complex64) {
    matrix.apply(v1.at(theta), v2.at(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeTrace {
    pub theta: Vec<f64>,
    pub v3: Vec<Complex64>,
    pub v4: Vec<Complex64>,
}

impl FringeTrace {
    pub fn power3(&self) -> Vec<f64> {
        self.v3.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn power4(&self) -> Vec<f64> {
        self.v4.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn with_leakage(mut self, leak: &Leakage) -> Self {
        self.v3.iter_mut().for_each(|v| *v += leak.v3);
        self.v4.iter_mut().for_each(|v| *v += leak.v4);
        self
    }
}

fn check_grid(theta_grid: &[f64]) -> Result<()> {
    if theta_grid.is_empty() {
        return Err(Error::Usage("theta grid is empty".into()));
    }
    if theta_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Domain("theta grid contains non-finite values".into()));
    }
    Ok(())
}

pub fn fringe_scan(
    matrix: &ScatterMatrix2,
    v1: &PortField,
    v2: &PortField,
    theta_grid: &[f64],
) -> Result<FringeTrace> {
    check_grid(theta_grid)?;
    let (v3, v4) = theta_grid.iter().map(|&th| combine(matrix, v1, v2, th)).unzip();
    Ok(FringeTrace { theta: theta_grid.to_vec(), v3, v4 })
}

/// `(max − min)/(max + min)`; zero for an all-zero trace.
pub fn visibility(power: &[f64]) -> f64 {
    let max = power.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = power.iter().cloned().fold(f64::INFINITY, f64::min);
    if power.is_empty() || max + min <= 0.0 {
        return 0.0;
    }
    (max - min) / (max + min)
}

/// Rabi frequency seen by the atom when both inputs drive it coherently:
/// `|Ω₁e^{i(θ+θ₀)} + Ω₂|` with `Ω = √(k·P)` and the phase of each field.
pub fn total_rabi(params: &QubitParams, v1: &PortField, v2: &PortField, theta: f64) -> f64 {
    let per_volt = (params.k() / (2.0 * LINE_IMPEDANCE_OHM)).sqrt();
    per_volt * (v1.at(theta) + v2.at(0.0)).norm()
}

/// Fringe scan where the atom's saturation follows the coherent sum of the
/// two drives. The matrix is rebuilt at each θ from the single-drive
/// reflection at `Ω_tot(θ)` and the line factors.
pub fn nonlinear_fringe_scan(
    params: &QubitParams,
    line_cal: &LineCalibration,
    omega_p: f64,
    v1: &PortField,
    v2: &PortField,
    theta_grid: &[f64],
) -> Result<FringeTrace> {
    check_grid(theta_grid)?;
    ensure_finite("omega_p", omega_p)?;
    let delta = omega_p - params.omega();
    let (v3, v4) = theta_grid
        .par_iter()
        .map(|&th| {
            let r = reflection_amplitude(params, delta, total_rabi(params, v1, v2, th));
            let m = line_cal.matrix(Complex64::new(1.0, 0.0) + r, r);
            combine(&m, v1, v2, th)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .unzip();
    Ok(FringeTrace { theta: theta_grid.to_vec(), v3, v4 })
}

/// `P(θ) ≈ offset + amplitude·cos(θ + phase)` by linear least squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinusoidFit {
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    /// RMS residual divided by RMS of the data.
    pub relative_residual: f64,
}

pub fn fit_sinusoid(theta: &[f64], power: &[f64]) -> Result<SinusoidFit> {
    if theta.len() != power.len() || theta.len() < 3 {
        return Err(Error::Usage("sinusoid fit needs >= 3 matched samples".into()));
    }
    let rows: Vec<[f64; 3]> = theta.iter().map(|t| [1.0, t.cos(), t.sin()]).collect();
    let a = nalgebra::DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
    let b = nalgebra::DVector::from_column_slice(power);
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(&b, 1e-12)
        .map_err(|e| Error::DegenerateGeometry(format!("sinusoid fit: {e}")))?;
    let resid = &a * &x - &b;
    let rms = |v: &nalgebra::DVector<f64>| (v.norm_squared() / v.len() as f64).sqrt();
    let scale = rms(&b);
    let (c, s) = (x[1], x[2]);
    Ok(SinusoidFit {
        offset: x[0],
        amplitude: c.hypot(s),
        phase: (-s).atan2(c),
        relative_residual: if scale > 0.0 { rms(&resid) / scale } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn grid(n: usize, span: f64) -> Vec<f64> {
        (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn identity_passes_inputs() {
        let fx = CombinerFixture::reference();
        let (v3, v4) = combine(&ScatterMatrix2::identity(), &fx.v1, &fx.v2, 0.3);
        assert_eq!(v3, fx.v1.at(0.3));
        assert_eq!(v4, fx.v2.amplitude);
    }

    #[test]
    fn single_input() {
        let fx = CombinerFixture::reference();
        let zero = PortField { amplitude: Complex64::new(0.0, 0.0), phase_offset: 0.0 };
        let (v3, v4) = combine(&fx.matrix, &fx.v1, &zero, 0.0);
        assert_eq!(v3, fx.matrix.t_l * fx.v1.at(0.0));
        assert_eq!(v4, fx.matrix.r_l * fx.v1.at(0.0));
    }

    #[test]
    fn reference_output_at_zero_phase() {
        // hand-expanded complex products of the fixture values, nV
        let (c, s) = (1.152f64.cos(), 1.152f64.sin());
        let (v1r, v1i) = (4.261 * c - 1.129 * s, 4.261 * s + 1.129 * c);
        let a_re = 0.674 * v1r - 0.241 * v1i;
        let a_im = 0.674 * v1i + 0.241 * v1r;
        let b_re = -0.387 * 2.182 - 0.577 * 3.634;
        let b_im = -0.387 * 3.634 + 0.577 * 2.182;
        let fx = CombinerFixture::reference();
        let (v3, _) = combine(&fx.matrix, &fx.v1, &fx.v2, 0.0);
        let v3 = v3 / NANOVOLT;
        assert!((v3.re - (a_re + b_re)).abs() < 1e-9);
        assert!((v3.im - (a_im + b_im)).abs() < 1e-9);
        assert!((v3 - Complex64::new(-3.52, 2.95)).norm() < 1e-2);
    }

    #[test]
    fn equal_amplitudes_cancel() {
        let m = ScatterMatrix2 {
            t_l: Complex64::new(0.5, 0.0),
            r_r: Complex64::new(0.0, 0.5),
            r_l: Complex64::new(0.0, 0.5),
            t_r: Complex64::new(0.5, 0.0),
        };
        let v1 = PortField { amplitude: Complex64::new(1.0, 0.0), phase_offset: 0.0 };
        let v2 = v1;
        // t_L V1 e^{iθ} = −r_R V2 when θ = −π/2
        let trace = fringe_scan(&m, &v1, &v2, &[-PI / 2.0]).unwrap();
        assert!(trace.v3[0].norm_sqr() < 1e-30);
    }

    #[test]
    fn fringes_are_sinusoidal_and_periodic() {
        let fx = CombinerFixture::reference();
        let th = grid(801, 2.0 * TAU);
        let trace = fringe_scan(&fx.matrix, &fx.v1, &fx.v2, &th).unwrap();
        let p3 = trace.power3();
        let full = fit_sinusoid(&th, &p3).unwrap();
        assert!(full.relative_residual < 1e-10);
        let first = fit_sinusoid(&th[..401], &p3[..401]).unwrap();
        let second = fit_sinusoid(&th[400..], &p3[400..]).unwrap();
        let scale = full.offset.abs();
        assert!((first.offset - second.offset).abs() <= 1e-12 * scale);
        assert!((first.amplitude - second.amplitude).abs() <= 1e-12 * scale);
        assert!((first.phase - second.phase).abs() <= 1e-12);
    }

    #[test]
    fn phase_offset_shifts_pattern() {
        let fx = CombinerFixture::reference();
        let th = grid(721, TAU);
        let base = fit_sinusoid(&th, &fringe_scan(&fx.matrix, &fx.v1, &fx.v2, &th).unwrap().power3()).unwrap();
        let shifted_v1 = PortField { phase_offset: fx.v1.phase_offset + 0.4, ..fx.v1 };
        let shifted = fit_sinusoid(&th, &fringe_scan(&fx.matrix, &shifted_v1, &fx.v2, &th).unwrap().power3()).unwrap();
        let d = (shifted.phase - base.phase - 0.4).rem_euclid(TAU);
        assert!(d.min(TAU - d) < 1e-9);
    }

    #[test]
    fn far_detuned_is_flat() {
        let fx = CombinerFixture::reference();
        let th = grid(101, TAU);
        let trace = fringe_scan(&ScatterMatrix2::identity(), &fx.v1, &fx.v2, &th).unwrap();
        assert!(visibility(&trace.power3()) < 1e-12);
        assert!(visibility(&trace.power4()) < 1e-12);
    }

    #[test]
    fn visibility_edges() {
        assert_eq!(visibility(&[0.0, 0.0]), 0.0);
        assert_eq!(visibility(&[2.0, 2.0, 2.0]), 0.0);
        assert_eq!(visibility(&[0.0, 1.0, 4.0]), 1.0);
        assert!(fringe_scan(&ScatterMatrix2::identity(), &CombinerFixture::reference().v1, &CombinerFixture::reference().v2, &[]).is_err());
    }

    #[test]
    fn leakage_offsets_outputs() {
        let fx = CombinerFixture::reference();
        let leak = Leakage { v3: Complex64::new(1e-10, 0.0), v4: Complex64::new(0.0, -1e-10) };
        let a = fringe_scan(&fx.matrix, &fx.v1, &fx.v2, &[0.0]).unwrap();
        let b = a.clone().with_leakage(&leak);
        assert!((b.v3[0] - a.v3[0] - leak.v3).norm() < 1e-24);
        assert!((b.v4[0] - a.v4[0] - leak.v4).norm() < 1e-24);
    }

    #[test]
    fn calibration_reproduces_fixture() {
        let fx = CombinerFixture::reference();
        let params = QubitParams::reference().with_omega(crate::units::ghz_to_angular(4.12)).unwrap();
        let wp = crate::units::ghz_to_angular(4.1108);
        let cal = LineCalibration::fit(&fx.matrix, &params, wp).unwrap();
        let r = reflection_amplitude(&params, wp - params.omega(), 0.0);
        let m = cal.matrix(Complex64::new(1.0, 0.0) + r, r);
        for (a, b) in [(m.t_l, fx.matrix.t_l), (m.r_r, fx.matrix.r_r), (m.r_l, fx.matrix.r_l), (m.t_r, fx.matrix.t_r)] {
            assert!((a - b).norm() < 1e-14);
        }
        assert!(LineCalibration::new(Complex64::new(0.0, 0.0), m.r_r, m.r_l, m.t_r).is_err());
    }

    #[test]
    fn sinusoid_fit_recovers_parameters() {
        let th = grid(50, TAU);
        let p: Vec<f64> = th.iter().map(|t| 3.0 + 1.5 * (t + 0.7).cos()).collect();
        let f = fit_sinusoid(&th, &p).unwrap();
        assert!((f.offset - 3.0).abs() < 1e-12);
        assert!((f.amplitude - 1.5).abs() < 1e-12);
        assert!((f.phase - 0.7).abs() < 1e-12);
    }
}
