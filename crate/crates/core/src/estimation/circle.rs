//! Circle fitting in the IQ plane: algebraic (Kåsa) start followed by
//! geometric refinement of perpendicular distances.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::lm::{minimize, LeastSquares, LmConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircleFitResult {
    pub center: Complex64,
    pub radius: f64,
    /// RMS perpendicular distance of the points from the circle.
    pub rms_residual: f64,
}

struct Geometric<'a> {
    points: &'a [Complex64],
}

impl LeastSquares for Geometric<'_> {
    fn residuals(&self, p: &[f64]) -> Vec<f64> {
        let c = Complex64::new(p[0], p[1]);
        self.points.iter().map(|z| (z - c).norm() - p[2]).collect()
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let c = Complex64::new(p[0], p[1]);
        let mut j = DMatrix::zeros(self.points.len(), 3);
        for (i, z) in self.points.iter().enumerate() {
            let d = z - c;
            let n = d.norm().max(f64::MIN_POSITIVE);
            j[(i, 0)] = -d.re / n;
            j[(i, 1)] = -d.im / n;
            j[(i, 2)] = -1.0;
        }
        j
    }
}

/// Relative spread below which points count as collinear.
const COLLINEAR_TOL: f64 = 1e-10;

fn algebraic_fit(points: &[Complex64], mean: Complex64) -> Result<(Complex64, f64)> {
    // x² + y² + D x + E y + F = 0 in coordinates centred on the mean
    let m = points.len();
    let a = DMatrix::from_fn(m, 3, |i, j| {
        let z = points[i] - mean;
        match j {
            0 => z.re,
            1 => z.im,
            _ => 1.0,
        }
    });
    let b = DVector::from_fn(m, |i, _| -(points[i] - mean).norm_sqr());
    let x = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::DegenerateGeometry(format!("algebraic circle fit failed: {e}")))?;
    let center = Complex64::new(-x[0] / 2.0, -x[1] / 2.0);
    let r2 = center.norm_sqr() - x[2];
    if !(r2 > 0.0) || !r2.is_finite() {
        return Err(Error::DegenerateGeometry("algebraic fit produced no real circle".into()));
    }
    Ok((center + mean, r2.sqrt()))
}

pub fn circle_fit(points: &[Complex64]) -> Result<CircleFitResult> {
    if points.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "need at least 3 points for a circle, got {}",
            points.len()
        )));
    }
    if points.iter().any(|z| !z.is_finite()) {
        return Err(Error::Domain("non-finite IQ points".into()));
    }
    let mean = points.iter().sum::<Complex64>() / points.len() as f64;
    // covariance eigenvalues: a vanishing minor axis means a line
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for z in points {
        let d = z - mean;
        sxx += d.re * d.re;
        syy += d.im * d.im;
        sxy += d.re * d.im;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (major, minor) = (0.5 * tr + disc, 0.5 * tr - disc);
    if major <= 0.0 || minor <= COLLINEAR_TOL * major {
        return Err(Error::DegenerateGeometry("points are collinear".into()));
    }

    let (c0, r0) = algebraic_fit(points, mean)?;
    let problem = Geometric { points };
    let out = minimize(&problem, &[c0.re, c0.im, r0], &LmConfig::default())?;
    let (center, radius) = (Complex64::new(out.params[0], out.params[1]), out.params[2].abs());
    if !(radius > 0.0) {
        return Err(Error::FitFailure("circle radius collapsed to zero".into()));
    }
    Ok(CircleFitResult { center, radius, rms_residual: out.rms() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::lm::central_difference_jacobian;
    use crate::scattering::{reflection_amplitude, QubitParams};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn weak_trace(p: &QubitParams, n: usize, span: f64) -> Vec<Complex64> {
        let g = p.decoherence();
        (0..n)
            .map(|i| {
                let d = -span * g + 2.0 * span * g * i as f64 / (n - 1) as f64;
                Complex64::new(1.0, 0.0) + reflection_amplitude(p, d, 0.0)
            })
            .collect()
    }

    #[test]
    fn three_points_on_unit_circle() {
        let pts = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0)];
        let f = circle_fit(&pts).unwrap();
        assert!(f.center.norm() < 1e-14);
        assert!((f.radius - 1.0).abs() < 1e-14);
        assert!(f.rms_residual < 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        let two = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0)];
        assert!(matches!(circle_fit(&two), Err(Error::DegenerateGeometry(_))));
        let line: Vec<Complex64> = (0..10).map(|i| Complex64::new(i as f64, 2.0 * i as f64)).collect();
        assert!(matches!(circle_fit(&line), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn weak_probe_transmission_circle() {
        let p = QubitParams::reference();
        let f = circle_fit(&weak_trace(&p, 201, 5.0)).unwrap();
        let diameter = p.max_reflection();
        let center = Complex64::new(1.0, 0.0) - Complex64::from_polar(diameter / 2.0, p.phi());
        assert!((2.0 * f.radius - diameter).abs() < 1e-12);
        assert!((f.center - center).norm() < 1e-12);
        assert!((diameter - 0.9656).abs() < 1e-3);
    }

    #[test]
    fn noisy_circle_radius_within_one_percent() {
        let p = QubitParams::reference();
        let clean = weak_trace(&p, 401, 5.0);
        let exact = circle_fit(&clean).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let noisy: Vec<Complex64> = clean
            .iter()
            .map(|z| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                z + Complex64::new(re, im) * 0.01
            })
            .collect();
        let f = circle_fit(&noisy).unwrap();
        assert!((f.radius / exact.radius - 1.0).abs() < 0.01);
    }

    #[test]
    fn analytic_jacobian_matches_central_differences() {
        let pts = weak_trace(&QubitParams::reference(), 31, 4.0);
        let prob = Geometric { points: &pts };
        let p = [0.4, -0.03, 0.47];
        let a = prob.jacobian(&p);
        let c = central_difference_jacobian(&prob, &p);
        assert!((a - &c).amax() <= 1e-6 * c.amax());
    }

    proptest! {
        #[test]
        fn rotation_equivariance(alpha in -3.1f64..3.1) {
            let pts = weak_trace(&QubitParams::reference(), 41, 4.0);
            let rot = Complex64::from_polar(1.0, alpha);
            let a = circle_fit(&pts).unwrap();
            let rotated: Vec<Complex64> = pts.iter().map(|z| z * rot).collect();
            let b = circle_fit(&rotated).unwrap();
            prop_assert!((b.center - a.center * rot).norm() < 1e-12);
            prop_assert!((b.radius - a.radius).abs() < 1e-12);
        }
    }
}
