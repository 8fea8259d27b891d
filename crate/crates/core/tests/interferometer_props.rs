use std::f64::consts::TAU;

use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use wqed_core::interferometer::{
    combine, fit_sinusoid, fringe_scan, nonlinear_fringe_scan, visibility, CombinerFixture, LineCalibration,
    PortField,
};
use wqed_core::scattering::reflection_amplitude;
use wqed_core::QubitParams;

fn ideal_atom() -> QubitParams {
    // purely radiative, matched line: the 2×2 relation is unitary
    QubitParams::new(4.0e9 * TAU, 20e6 * TAU, 0.0, 0.0, 1e32).unwrap()
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| TAU * i as f64 / n as f64).collect()
}

proptest! {
    #[test]
    fn lossless_combiner_conserves_power(
        x in -5.0..5.0f64,
        a1 in 0.1..5.0f64, a2 in 0.1..5.0f64,
        p1 in 0.0..TAU, theta in 0.0..TAU,
    ) {
        let p = ideal_atom();
        let r = reflection_amplitude(&p, x * p.decoherence(), 0.0);
        let m = LineCalibration::unity().matrix(Complex64::new(1.0, 0.0) + r, r);
        let v1 = PortField::new(Complex64::from_polar(a1, p1), 0.0).unwrap();
        let v2 = PortField::new(Complex64::new(a2, 0.0), 0.0).unwrap();
        let (v3, v4) = combine(&m, &v1, &v2, theta);
        let p_in = a1 * a1 + a2 * a2;
        prop_assert!((v3.norm_sqr() + v4.norm_sqr() - p_in).abs() < 1e-12 * p_in);
    }

    #[test]
    fn visibility_bounded(amp_db in -20.0..20.0f64, n in 8usize..200) {
        let fx = CombinerFixture::reference();
        let t = fringe_scan(&fx.matrix, &fx.v1.scaled_db(amp_db), &fx.v2, &grid(n)).unwrap();
        for pw in [t.power3(), t.power4()] {
            let v = visibility(&pw);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn linear_fringes_scale_with_common_power(db in -30.0..30.0f64) {
        let fx = CombinerFixture::reference();
        let th = grid(64);
        let a = fringe_scan(&fx.matrix, &fx.v1, &fx.v2, &th).unwrap();
        let b = fringe_scan(&fx.matrix, &fx.v1.scaled_db(db), &fx.v2.scaled_db(db), &th).unwrap();
        let g = 10f64.powf(db / 10.0);
        for (x, y) in a.power3().iter().zip(b.power3()) {
            prop_assert!((y - g * x).abs() <= 1e-12 * g * x.max(1e-30));
        }
    }
}

#[test]
fn weak_nonlinear_scan_matches_linear_matrix() {
    let fx = CombinerFixture::reference();
    let params = QubitParams::reference().with_omega(4.12e9 * TAU).unwrap();
    let omega_p = 4.1108e9 * TAU;
    let cal = LineCalibration::fit(&fx.matrix, &params, omega_p).unwrap();
    let th = grid(90);
    // −60 dB: the atom stays deep in the linear regime
    let (v1, v2) = (fx.v1.scaled_db(-60.0), fx.v2.scaled_db(-60.0));
    let lin = fringe_scan(&fx.matrix, &v1, &v2, &th).unwrap();
    let nl = nonlinear_fringe_scan(&params, &cal, omega_p, &v1, &v2, &th).unwrap();
    for (a, b) in lin.v3.iter().zip(&nl.v3) {
        assert!((a - b).norm() <= 1e-6 * a.norm().max(1e-15));
    }
}

#[test]
fn fixture_sinusoid_has_unit_period() {
    let fx = CombinerFixture::reference();
    let th = grid(256);
    let t = fringe_scan(&fx.matrix, &fx.v1, &fx.v2, &th).unwrap();
    let p: Vec<f64> = t.power4().iter().map(|x| x * 1e18).collect();
    let fit = fit_sinusoid(&th, &p).unwrap();
    assert!(fit.relative_residual < 1e-12);
    // offset and amplitude from the field magnitudes alone
    let a = (fx.matrix.r_l * fx.v1.amplitude).norm() * 1e9;
    let b = (fx.matrix.t_r * fx.v2.amplitude).norm() * 1e9;
    assert_relative_eq!(fit.offset, a * a + b * b, max_relative = 1e-9);
    assert_relative_eq!(fit.amplitude, 2.0 * a * b, max_relative = 1e-9);
}
