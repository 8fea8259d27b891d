//! Damped least squares (Levenberg–Marquardt with Marquardt diagonal
//! scaling) for small dense problems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub trait LeastSquares {
    fn residuals(&self, params: &[f64]) -> Vec<f64>;

    /// Jacobian of the residuals, `m × n`. Defaults to central differences.
    fn jacobian(&self, params: &[f64]) -> DMatrix<f64> {
        central_difference_jacobian(self, params)
    }
}

fn fd_step(p: f64, h: f64) -> f64 {
    h * p.abs().max(1.0)
}

pub fn central_difference_jacobian<P: LeastSquares + ?Sized>(problem: &P, params: &[f64]) -> DMatrix<f64> {
    let n = params.len();
    let m = problem.residuals(params).len();
    let mut jac = DMatrix::zeros(m, n);
    let mut p = params.to_vec();
    for j in 0..n {
        let h = fd_step(params[j], f64::EPSILON.cbrt());
        p[j] = params[j] + h;
        let up = problem.residuals(&p);
        p[j] = params[j] - h;
        let down = problem.residuals(&p);
        p[j] = params[j];
        for i in 0..m {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    jac
}

pub fn forward_difference_jacobian<P: LeastSquares + ?Sized>(problem: &P, params: &[f64]) -> DMatrix<f64> {
    let n = params.len();
    let base = problem.residuals(params);
    let mut jac = DMatrix::zeros(base.len(), n);
    let mut p = params.to_vec();
    for j in 0..n {
        let h = fd_step(params[j], f64::EPSILON.sqrt());
        p[j] = params[j] + h;
        let up = problem.residuals(&p);
        p[j] = params[j];
        for i in 0..base.len() {
            jac[(i, j)] = (up[i] - base[i]) / h;
        }
    }
    jac
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Relative cost reduction below which the fit is converged.
    pub ftol: f64,
    /// Relative step size below which the fit is converged.
    pub xtol: f64,
    /// Infinity norm of the gradient below which the fit is converged.
    pub gtol: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self { max_iterations: 500, ftol: 1e-15, xtol: 1e-14, gtol: 1e-30 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    /// ½‖r‖².
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Jacobian at the solution.
    pub jacobian: DMatrix<f64>,
}

impl LmOutcome {
    pub fn rms(&self) -> f64 {
        (2.0 * self.cost / self.residuals.len().max(1) as f64).sqrt()
    }

    /// `s²(JᵀJ)⁻¹` with `s² = ‖r‖²/(m − n)`; `None` if singular or m ≤ n.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        let (m, n) = self.jacobian.shape();
        if m <= n {
            return None;
        }
        let s2 = 2.0 * self.cost / (m - n) as f64;
        let jtj = self.jacobian.transpose() * &self.jacobian;
        jtj.try_inverse().map(|inv| inv * s2)
    }
}

fn half_sq_norm(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

pub fn minimize<P: LeastSquares + ?Sized>(problem: &P, init: &[f64], config: &LmConfig) -> Result<LmOutcome> {
    let n = init.len();
    let mut p = init.to_vec();
    let mut r = problem.residuals(&p);
    if r.len() < n {
        return Err(Error::FitFailure(format!("{} residuals for {n} parameters", r.len())));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailure("non-finite residuals at the initial point".into()));
    }
    let mut cost = half_sq_norm(&r);
    let mut jac = problem.jacobian(&p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        if g.amax() <= config.gtol || cost == 0.0 {
            converged = true;
            break;
        }

        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for i in 0..n {
                let d = a[(i, i)];
                damped[(i, i)] += lambda * if d > 0.0 { d } else { 1.0 };
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 4.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
            let r_trial = problem.residuals(&trial);
            let c_trial = half_sq_norm(&r_trial);
            if c_trial.is_finite() && c_trial <= cost {
                let rel_drop = (cost - c_trial) / cost.max(f64::MIN_POSITIVE);
                let step_norm = step.norm();
                let p_norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                p = trial;
                r = r_trial;
                cost = c_trial;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if rel_drop <= config.ftol || step_norm <= config.xtol * (p_norm + config.xtol) {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        jac = problem.jacobian(&p);
        if !accepted {
            // no descent possible at any damping: stationary to working precision
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailure("fit diverged to non-finite parameters".into()));
    }
    Ok(LmOutcome { params: p, residuals: r, cost, iterations, converged, jacobian: jac })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;

    impl LeastSquares for Rosenbrock {
        fn residuals(&self, p: &[f64]) -> Vec<f64> {
            vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]
        }
    }

    struct Exponential {
        x: Vec<f64>,
        y: Vec<f64>,
    }

    impl LeastSquares for Exponential {
        fn residuals(&self, p: &[f64]) -> Vec<f64> {
            self.x.iter().zip(&self.y).map(|(x, y)| p[0] * (-p[1] * x).exp() - y).collect()
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], &LmConfig::default()).unwrap();
        assert!(out.converged);
        assert!((out.params[0] - 1.0).abs() < 1e-10);
        assert!((out.params[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn recovers_exponential_decay() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y = x.iter().map(|x| 2.5 * (-1.3 * x).exp()).collect();
        let prob = Exponential { x, y };
        let out = minimize(&prob, &[1.0, 0.5], &LmConfig::default()).unwrap();
        assert!((out.params[0] - 2.5).abs() < 1e-10);
        assert!((out.params[1] - 1.3).abs() < 1e-10);
        assert!(out.rms() < 1e-10);
    }

    #[test]
    fn difference_jacobians_agree() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let y = vec![0.0; 10];
        let prob = Exponential { x, y };
        let c = central_difference_jacobian(&prob, &[2.0, 0.7]);
        let f = forward_difference_jacobian(&prob, &[2.0, 0.7]);
        assert!((c - f).amax() < 1e-6);
    }
}
