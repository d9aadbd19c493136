// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

//! Noise spectroscopy from CP decays: each pulse spacing `τ` probes the
//! spectrum at `π/τ` through `1/T₂(τ) ≃ (4/π²) S(π/τ)`.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};

use super::{GaussianLine, NoiseSpectrum};

/// `S(π/τ)` from a CP coherence time.
pub fn spectrum_from_t2(tau: f64, t2: f64) -> Result<f64> {
    if !(tau > 0.0) || !(t2 > 0.0) {
        return Err(invalid(format!("tau and T2 must be positive, got tau={tau}, T2={t2}")));
    }
    Ok(PI * PI / (4.0 * t2))
}

/// Inverse of [`spectrum_from_t2`].
pub fn t2_from_spectrum(tau: f64, s: f64) -> Result<f64> {
    if !(tau > 0.0) || !(s > 0.0) {
        return Err(invalid(format!("tau and S must be positive, got tau={tau}, S={s}")));
    }
    Ok(PI * PI / (4.0 * s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPoint {
    pub total_time: f64,
    pub signal: f64,
    pub pulses: usize,
}

/// Signal versus total sequence time at a fixed pulse spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    pub tau: f64,
    pub points: Vec<DecayPoint>,
}

impl DecayCurve {
    pub fn new(tau: f64, points: Vec<DecayPoint>) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(invalid("decay curve spacing must be positive"));
        }
        let mut prev = 0.0;
        for p in &points {
            if !(p.signal >= 0.0 && p.signal <= 1.0) {
                return Err(invalid(format!("signal {} outside [0, 1]", p.signal)));
            }
            if !(p.total_time > prev) {
                return Err(invalid("decay times must be positive and increasing"));
            }
            prev = p.total_time;
        }
        Ok(Self { tau, points })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub tau: f64,
    pub t2: f64,
    pub t2_err: f64,
    pub residual_norm: f64,
}

/// Fit `s(t) = ½(1 + e^{-t/T₂})`.
pub fn fit_decay(curve: &DecayCurve) -> Result<DecayFit> {
    let pts = &curve.points;
    if pts.len() < 4 {
        return Err(invalid(format!(
            "a decay fit needs at least 4 points, got {}",
            pts.len()
        )));
    }
    let first = pts[0].signal;
    if pts.iter().all(|p| p.signal == first) {
        return Err(Error::FitFailure("signal does not decay".into()));
    }
    let t_min = pts[0].total_time;
    let t_max = pts[pts.len() - 1].total_time;

    // log-linear start from the points still above the floor
    let (mut num, mut den) = (0.0, 0.0);
    for p in pts {
        let y = 2.0 * p.signal - 1.0;
        if y > 1e-3 {
            num -= p.total_time * y.ln();
            den += p.total_time * p.total_time;
        }
    }
    let mut rate0 = if den > 0.0 { num / den } else { 0.0 };
    if !(rate0 > 0.0 && rate0.is_finite()) {
        rate0 = 1.0 / (0.5 * (t_min + t_max));
    }

    let residual = |p: &[f64]| -> Vec<f64> {
        let rate = p[0].exp();
        pts.iter()
            .map(|q| 0.5 * (1.0 + (-rate * q.total_time).exp()) - q.signal)
            .collect()
    };
    let fit = levenberg_marquardt(residual, &[rate0.ln()], &LmOptions::default())?;
    let rate = fit.params[0].exp();
    if !(rate * t_max > 1e-6) {
        return Err(Error::FitFailure(
            "no decay over the sampled window (T2 unbounded)".into(),
        ));
    }
    if rate * t_min > 40.0 {
        return Err(Error::FitFailure(
            "signal fully decayed at the first point (T2 not resolved)".into(),
        ));
    }
    let t2 = 1.0 / rate;
    let t2_err = fit.std_errors().map_or(f64::NAN, |e| e[0] * t2);
    Ok(DecayFit {
        tau: curve.tau,
        t2,
        t2_err,
        residual_norm: fit.rss.sqrt(),
    })
}

/// Result of [`fit_spectrum_from_decays`].
#[derive(Debug, Clone)]
pub struct SpectrumEstimate {
    pub spectrum: NoiseSpectrum,
    pub decays: Vec<DecayFit>,
    /// `(π/τ, π²/4T₂)` per curve
    pub points: Vec<(f64, f64)>,
    /// model minus point, per point
    pub residuals: Vec<f64>,
}

fn mixture_from_params(p: &[f64]) -> Vec<GaussianLine> {
    p.chunks(3)
        .map(|c| GaussianLine {
            amplitude: c[0].exp(),
            center: c[1],
            width: c[2].exp(),
        })
        .collect()
}

fn eval_lines(lines: &[GaussianLine], w: f64) -> f64 {
    lines
        .iter()
        .map(|l| {
            let a = (w - l.center) / l.width;
            let b = (w + l.center) / l.width;
            l.amplitude * ((-0.5 * a * a).exp() + (-0.5 * b * b).exp())
        })
        .sum()
}

/// Fit each decay, map to spectral points, then least-squares fit a
/// mixture of `n_components` gaussian lines.
pub fn fit_spectrum_from_decays(curves: &[DecayCurve], n_components: usize) -> Result<SpectrumEstimate> {
    if n_components == 0 {
        return Err(invalid("at least one gaussian component is required"));
    }
    let mut taus: Vec<f64> = curves.iter().map(|c| c.tau).collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    // 3 parameters per line plus one degree of freedom
    let required = 3 * n_components + 1;
    if taus.len() < required {
        return Err(invalid(format!(
            "{n_components} components need at least {required} distinct pulse spacings, got {}",
            taus.len()
        )));
    }

    let decays: Vec<DecayFit> = curves.iter().map(fit_decay).collect::<Result<_>>()?;
    let mut points: Vec<(f64, f64)> = decays
        .iter()
        .map(|d| Ok((PI / d.tau, spectrum_from_t2(d.tau, d.t2)?)))
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| a.0.total_cmp(&b.0));

    let scale = points.iter().map(|p| p.1).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::FitFailure("all spectral points vanish".into()));
    }
    let (w_lo, w_hi) = (points[0].0, points[points.len() - 1].0);
    let band = w_hi - w_lo;

    // centers seeded at local maxima of the point cloud, tallest first
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 0..points.len() {
        let left = if i > 0 { points[i - 1].1 } else { f64::NEG_INFINITY };
        let right = points.get(i + 1).map_or(f64::NEG_INFINITY, |p| p.1);
        if points[i].1 >= left && points[i].1 >= right {
            peaks.push(points[i]);
        }
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    peaks.truncate(n_components);
    let mut k = 1;
    while peaks.len() < n_components {
        let w = w_lo + band * k as f64 / (n_components + 1) as f64;
        let s = points
            .iter()
            .min_by(|a, b| (a.0 - w).abs().total_cmp(&(b.0 - w).abs()))
            .unwrap()
            .1;
        peaks.push((w, s));
        k += 1;
    }

    let residual = |p: &[f64]| -> Vec<f64> {
        let lines = mixture_from_params(p);
        points
            .iter()
            .map(|&(w, s)| (eval_lines(&lines, w) - s) / scale)
            .collect()
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for width_frac in [0.05, 0.1, 0.2, 0.4] {
        let mut x0 = Vec::with_capacity(3 * n_components);
        for &(c, s) in &peaks {
            x0.push(s.max(1e-3 * scale).ln());
            x0.push(c);
            x0.push((width_frac * band / n_components as f64).max(1e-9).ln());
        }
        let Ok(fit) = levenberg_marquardt(&residual, &x0, &LmOptions::default()) else {
            continue;
        };
        if fit.rss.is_finite() && best.as_ref().map_or(true, |b| fit.rss < b.0) {
            best = Some((fit.rss, fit.params));
        }
    }
    let (_, params) = best.ok_or_else(|| Error::FitFailure("mixture fit diverged from every start".into()))?;
    let mut lines = mixture_from_params(&params);
    for l in &mut lines {
        l.center = l.center.abs();
    }
    lines.sort_by(|a, b| a.center.total_cmp(&b.center));
    let residuals = points.iter().map(|&(w, s)| eval_lines(&lines, w) - s).collect();
    Ok(SpectrumEstimate {
        spectrum: NoiseSpectrum::gaussian_mixture(lines)?,
        decays,
        points,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn synthetic(t2: f64, noise: f64, seed: u64) -> DecayCurve {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, noise).unwrap();
        let pts = (1..=30)
            .map(|k| {
                let t = k as f64 * 12e-6;
                let s = 0.5 * (1.0 + (-t / t2).exp()) + if noise > 0.0 { n.sample(&mut rng) } else { 0.0 };
                DecayPoint {
                    total_time: t,
                    signal: s.clamp(0.0, 1.0),
                    pulses: k,
                }
            })
            .collect();
        DecayCurve::new(12e-6, pts).unwrap()
    }

    #[test]
    fn eq9_direct_and_round_trip() {
        let s = spectrum_from_t2(5e-6, 100e-6).unwrap();
        assert!((s - 2.4674e4).abs() < 0.1);
        let t2 = t2_from_spectrum(5e-6, s).unwrap();
        assert!(((t2 - 100e-6) / 100e-6).abs() < 1e-12);
        assert_eq!(spectrum_from_t2(5e-6, f64::INFINITY).unwrap(), 0.0);
        assert!(spectrum_from_t2(0.0, 1.0).is_err());
        assert!(spectrum_from_t2(1.0, -1.0).is_err());
    }

    #[test]
    fn exact_curve_fits_exactly() {
        let fit = fit_decay(&synthetic(150e-6, 0.0, 0)).unwrap();
        assert!(((fit.t2 - 150e-6) / 150e-6).abs() < 1e-9);
        assert!(fit.t2_err < 1e-12);
    }

    #[test]
    fn noisy_curves_recover_t2() {
        for seed in 0..100 {
            let fit = fit_decay(&synthetic(150e-6, 0.01, seed)).unwrap();
            assert!(((fit.t2 - 150e-6) / 150e-6).abs() < 0.05, "seed {seed}: {}", fit.t2);
        }
    }

    #[test]
    fn flat_signal_is_a_fit_failure() {
        let pts = (1..=6)
            .map(|k| DecayPoint {
                total_time: k as f64 * 1e-6,
                signal: 0.5,
                pulses: k,
            })
            .collect();
        let c = DecayCurve::new(1e-6, pts).unwrap();
        assert!(matches!(fit_decay(&c), Err(Error::FitFailure(_))));

        let pts = (1..=6)
            .map(|k| DecayPoint {
                total_time: k as f64 * 1e-6,
                signal: if k == 6 { 1.0 - 2e-7 } else { 1.0 },
                pulses: k,
            })
            .collect();
        let c = DecayCurve::new(1e-6, pts).unwrap();
        assert!(matches!(fit_decay(&c), Err(Error::FitFailure(_))));
    }

    #[test]
    fn too_few_points_or_components() {
        let c = synthetic(100e-6, 0.0, 0);
        let short = DecayCurve::new(c.tau, c.points[..3].to_vec()).unwrap();
        assert!(fit_decay(&short).is_err());
        assert!(fit_spectrum_from_decays(&[c.clone()], 0).is_err());
        let err = fit_spectrum_from_decays(&[c], 1).unwrap_err();
        assert!(err.to_string().contains("at least 4"));
    }

    #[test]
    fn curve_validation() {
        let p = |t: f64, s: f64| DecayPoint {
            total_time: t,
            signal: s,
            pulses: 1,
        };
        assert!(DecayCurve::new(1e-6, vec![p(1.0, 1.2)]).is_err());
        assert!(DecayCurve::new(1e-6, vec![p(2.0, 0.9), p(1.0, 0.8)]).is_err());
        assert!(DecayCurve::new(0.0, vec![]).is_err());
    }
}
