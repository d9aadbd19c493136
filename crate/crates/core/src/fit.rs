// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

//! Small dense least-squares helpers: Levenberg-Marquardt with a
//! finite-difference Jacobian, and linear polynomial fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iter: usize,
    pub xtol: f64,
    pub ftol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            xtol: 1e-12,
            ftol: 1e-15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmFit {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    /// `(JᵀJ)⁻¹` at the solution, if nonsingular
    pub inv_normal: Option<DMatrix<f64>>,
    pub iterations: usize,
}

impl LmFit {
    /// Standard errors scaled by the residual variance `rss / (m - p)`.
    pub fn std_errors(&self) -> Option<Vec<f64>> {
        let m = self.residuals.len();
        let p = self.params.len();
        if m <= p {
            return None;
        }
        let s2 = self.rss / (m - p) as f64;
        let inv = self.inv_normal.as_ref()?;
        Some((0..p).map(|i| (s2 * inv[(i, i)]).max(0.0).sqrt()).collect())
    }
}

fn jacobian<F: Fn(&[f64]) -> Vec<f64>>(f: &F, x: &[f64], r0: &[f64]) -> DMatrix<f64> {
    let m = r0.len();
    let mut j = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-7 * x[i].abs().max(1e-7);
        xp[i] = x[i] + h;
        let rp = f(&xp);
        xp[i] = x[i] - h;
        let rm = f(&xp);
        xp[i] = x[i];
        for k in 0..m {
            j[(k, i)] = (rp[k] - rm[k]) / (2.0 * h);
        }
    }
    j
}

fn rss(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Minimize `Σ r_k(x)²`.
pub fn levenberg_marquardt<F: Fn(&[f64]) -> Vec<f64>>(f: F, x0: &[f64], opts: &LmOptions) -> Result<LmFit> {
    let mut x = x0.to_vec();
    let mut r = f(&x);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailure(
            "residuals are not finite at the initial guess".into(),
        ));
    }
    let mut cost = rss(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let j = jacobian(&f, &x, &r);
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * DVector::from_column_slice(&r);
        let mut improved = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..x.len() {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rn = f(&xn);
            let cn = rss(&rn);
            if cn.is_finite() && cn < cost {
                let small_step = step
                    .iter()
                    .zip(&x)
                    .all(|(s, xi)| s.abs() <= opts.xtol * (xi.abs() + opts.xtol));
                let small_gain = cost - cn <= opts.ftol * cost;
                x = xn;
                r = rn;
                cost = cn;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if small_step || small_gain {
                    return Ok(finish(&f, x, r, cost, iterations));
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    Ok(finish(&f, x, r, cost, iterations))
}

fn finish<F: Fn(&[f64]) -> Vec<f64>>(f: &F, x: Vec<f64>, r: Vec<f64>, rss: f64, iterations: usize) -> LmFit {
    let j = jacobian(f, &x, &r);
    let jtj = j.transpose() * &j;
    let inv_normal = jtj.try_inverse();
    LmFit {
        params: x,
        residuals: r,
        rss,
        inv_normal,
        iterations,
    }
}

/// Least-squares polynomial of the given degree; returns coefficients
/// (constant first) and their covariance scaled by the residual variance.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = x.len();
    let p = degree + 1;
    if m < p || y.len() != m {
        return Err(Error::FitFailure(format!(
            "polynomial of degree {degree} needs {p} points"
        )));
    }
    let a = DMatrix::from_fn(m, p, |i, j| x[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    let ata = a.transpose() * &a;
    let inv = ata
        .try_inverse()
        .ok_or_else(|| Error::FitFailure("singular design matrix".into()))?;
    let coef = &inv * (a.transpose() * &b);
    let resid = &b - &a * &coef;
    let s2 = if m > p {
        resid.norm_squared() / (m - p) as f64
    } else {
        0.0
    };
    Ok((coef.iter().copied().collect(), inv * s2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_fit_recovers_rate() {
        let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.0 * (-1.3 * t).exp()).collect();
        let fit = levenberg_marquardt(
            |p| t.iter().zip(&y).map(|(t, y)| p[0] * (-p[1] * t).exp() - y).collect(),
            &[1.0, 0.5],
            &LmOptions::default(),
        )
        .unwrap();
        assert!((fit.params[0] - 2.0).abs() < 1e-8);
        assert!((fit.params[1] - 1.3).abs() < 1e-8);
    }

    #[test]
    fn polyfit_exact_parabola() {
        let x = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let y: Vec<f64> = x.iter().map(|x| 1.0 + 2.0 * x - 0.5 * x * x).collect();
        let (c, cov) = polyfit(&x, &y, 2).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 2.0).abs() < 1e-12 && (c[2] + 0.5).abs() < 1e-12);
        assert!(cov.iter().all(|v| v.abs() < 1e-20));
        assert!(polyfit(&x[..2], &y[..2], 2).is_err());
    }
}
