// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

//! Known temporal profiles `f(t)` of the target field `b(t) = b f(t)`.
//!
//! Every variant provides `f(t)` and its running integral `P(t) = ∫₀ᵗ f`,
//! from which the running mean `F(t) = P(t)/t` follows. The phase formula in
//! [`crate::sensing`] only ever needs `P`, so that is the primitive here.

use std::f64::consts::{PI, TAU};

use crate::error::{invalid, Error, Result};

/// Gaussian terms farther than this many widths from `t` are dropped.
const GAUSS_CUTOFF_SIGMAS: f64 = 8.0;

/// One cosine component `w cos(2πνt + α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    pub weight: f64,
    pub freq_hz: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldModel {
    Multitone(Vec<Tone>),
    /// `Σ_{i=0}^{reps} exp(-(t - iΔt)² / 2σ²)`
    GaussianTrain {
        sigma: f64,
        period: f64,
        reps: usize,
    },
    SingleGaussian {
        sigma: f64,
        center: f64,
    },
    Tabulated(Tabulated),
}

/// Uniformly sampled waveform starting at `t = 0`, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    step: f64,
    values: Vec<f64>,
    /// running trapezoid integral at each grid point
    cumulative: Vec<f64>,
}

impl Tabulated {
    pub fn new(times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() != values.len() {
            return Err(invalid("tabulated field: times and values differ in length"));
        }
        if times.len() < 2 {
            return Err(invalid("tabulated field needs at least two samples"));
        }
        if times[0] != 0.0 {
            return Err(invalid("tabulated field must start at t = 0"));
        }
        let step = times[1] - times[0];
        if !(step > 0.0) {
            return Err(invalid("tabulated sample times must be strictly increasing"));
        }
        for (k, w) in times.windows(2).enumerate() {
            let dt = w[1] - w[0];
            if !(dt > 0.0) {
                return Err(invalid("tabulated sample times must be strictly increasing"));
            }
            if (dt - step).abs() > 1e-6 * step {
                return Err(invalid(format!("tabulated grid is not uniform at sample {}", k + 1)));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("tabulated values must be finite"));
        }
        let step = times[times.len() - 1] / (times.len() - 1) as f64;
        let mut cumulative = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in values.windows(2) {
            acc += 0.5 * step * (w[0] + w[1]);
            cumulative.push(acc);
        }
        Ok(Self {
            step,
            values: values.to_vec(),
            cumulative,
        })
    }

    pub fn end(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let end = self.end();
        if !(t >= 0.0 && t <= end) {
            return Err(Error::OutOfDomain {
                what: "t",
                value: t,
                lo: 0.0,
                hi: end,
            });
        }
        let k = ((t / self.step) as usize).min(self.values.len() - 2);
        Ok((k, t - k as f64 * self.step))
    }

    fn eval(&self, t: f64) -> Result<f64> {
        let (k, dx) = self.locate(t)?;
        let slope = (self.values[k + 1] - self.values[k]) / self.step;
        Ok(self.values[k] + slope * dx)
    }

    fn integral(&self, t: f64) -> Result<f64> {
        let (k, dx) = self.locate(t)?;
        let slope = (self.values[k + 1] - self.values[k]) / self.step;
        Ok(self.cumulative[k] + self.values[k] * dx + 0.5 * slope * dx * dx)
    }
}

/// `erf(b) - erf(a)` without cancellation in the tails.
fn erf_diff(a: f64, b: f64) -> f64 {
    if a > 0.5 && b > 0.5 {
        libm::erfc(a) - libm::erfc(b)
    } else if a < -0.5 && b < -0.5 {
        libm::erfc(-b) - libm::erfc(-a)
    } else {
        libm::erf(b) - libm::erf(a)
    }
}

/// `∫₀ᵗ exp(-(s - c)² / 2σ²) ds`
fn gaussian_integral(t: f64, center: f64, sigma: f64) -> f64 {
    let k = 1.0 / (sigma * std::f64::consts::SQRT_2);
    sigma * (PI / 2.0).sqrt() * erf_diff(-center * k, (t - center) * k)
}

impl FieldModel {
    pub fn multitone(tones: Vec<Tone>) -> Result<Self> {
        if tones.is_empty() {
            return Err(invalid("multitone field needs at least one component"));
        }
        for tone in &tones {
            if !(tone.freq_hz > 0.0 && tone.freq_hz.is_finite()) {
                return Err(invalid(format!(
                    "tone frequency must be positive, got {}",
                    tone.freq_hz
                )));
            }
            if !tone.weight.is_finite() || !tone.phase_rad.is_finite() {
                return Err(invalid("tone weight and phase must be finite"));
            }
        }
        let total: f64 = tones.iter().map(|t| t.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("multitone weights must sum to 1, got {total}")));
        }
        Ok(FieldModel::Multitone(tones))
    }

    /// A single tone `cos(2πνt + α)`.
    pub fn monochromatic(freq_hz: f64, phase_rad: f64) -> Result<Self> {
        Self::multitone(vec![Tone {
            weight: 1.0,
            freq_hz,
            phase_rad,
        }])
    }

    /// Tones sharing one phase `α`.
    pub fn multitone_shared_phase(weights: &[f64], freqs_hz: &[f64], phase_rad: f64) -> Result<Self> {
        if weights.len() != freqs_hz.len() {
            return Err(invalid("weights and frequencies differ in length"));
        }
        Self::multitone(
            weights
                .iter()
                .zip(freqs_hz)
                .map(|(&weight, &freq_hz)| Tone {
                    weight,
                    freq_hz,
                    phase_rad,
                })
                .collect(),
        )
    }

    pub fn gaussian_train(sigma: f64, period: f64, reps: usize) -> Result<Self> {
        if !(sigma > 0.0 && period > 0.0) {
            return Err(invalid("gaussian train needs sigma > 0 and period > 0"));
        }
        if reps < 1 {
            return Err(invalid("gaussian train needs at least one repetition"));
        }
        Ok(FieldModel::GaussianTrain { sigma, period, reps })
    }

    pub fn single_gaussian(sigma: f64, center: f64) -> Result<Self> {
        if !(sigma > 0.0) || !center.is_finite() {
            return Err(invalid("single gaussian needs sigma > 0 and a finite center"));
        }
        Ok(FieldModel::SingleGaussian { sigma, center })
    }

    pub fn tabulated(times: &[f64], values: &[f64]) -> Result<Self> {
        Ok(FieldModel::Tabulated(Tabulated::new(times, values)?))
    }

    fn check_time(t: f64) -> Result<()> {
        if t >= 0.0 && t.is_finite() {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                what: "t",
                value: t,
                lo: 0.0,
                hi: f64::INFINITY,
            })
        }
    }

    /// Range of train indices whose gaussians reach `[lo, hi]`.
    fn train_indices(sigma: f64, period: f64, reps: usize, lo: f64, hi: f64) -> std::ops::RangeInclusive<usize> {
        let reach = GAUSS_CUTOFF_SIGMAS * sigma;
        let first = ((lo - reach) / period).ceil().max(0.0) as usize;
        let last = (((hi + reach) / period).floor().max(0.0) as usize).min(reps);
        first..=last
    }

    /// `f(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        Ok(match self {
            FieldModel::Multitone(tones) => tones
                .iter()
                .map(|p| p.weight * (TAU * p.freq_hz * t + p.phase_rad).cos())
                .sum(),
            &FieldModel::GaussianTrain { sigma, period, reps } => {
                let mut s = 0.0;
                for i in Self::train_indices(sigma, period, reps, t, t) {
                    let d = t - i as f64 * period;
                    s += (-d * d / (2.0 * sigma * sigma)).exp();
                }
                s
            }
            &FieldModel::SingleGaussian { sigma, center } => {
                let d = t - center;
                (-d * d / (2.0 * sigma * sigma)).exp()
            }
            FieldModel::Tabulated(tab) => tab.eval(t)?,
        })
    }

    /// Running integral `P(t) = ∫₀ᵗ f(s) ds`.
    pub fn integral(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        Ok(match self {
            FieldModel::Multitone(tones) => tones
                .iter()
                .map(|p| {
                    let w = TAU * p.freq_hz;
                    // sin(wt + α) - sin α, written without cancellation
                    p.weight * 2.0 * (0.5 * w * t + p.phase_rad).cos() * (0.5 * w * t).sin() / w
                })
                .sum(),
            &FieldModel::GaussianTrain { sigma, period, reps } => {
                let full = sigma * TAU.sqrt();
                let reach = GAUSS_CUTOFF_SIGMAS * sigma;
                let mut s = 0.0;
                for i in 0..=reps {
                    let c = i as f64 * period;
                    if c - reach > t {
                        break;
                    }
                    if c >= reach && c + reach <= t {
                        s += full;
                    } else {
                        s += gaussian_integral(t, c, sigma);
                    }
                }
                s
            }
            &FieldModel::SingleGaussian { sigma, center } => gaussian_integral(t, center, sigma),
            FieldModel::Tabulated(tab) => tab.integral(t)?,
        })
    }

    /// Running mean `F(t) = P(t)/t`, with `F(0) = f(0)`.
    pub fn mean_integral(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return self.eval(0.0);
        }
        Ok(self.integral(t)? / t)
    }

    /// Shift every tone phase by `alpha`. Only multitone fields carry a phase.
    pub fn with_phase_shift(&self, alpha: f64) -> Result<Self> {
        match self {
            FieldModel::Multitone(tones) => Ok(FieldModel::Multitone(
                tones
                    .iter()
                    .map(|t| Tone {
                        phase_rad: t.phase_rad + alpha,
                        ..*t
                    })
                    .collect(),
            )),
            _ => Err(invalid("a phase shift needs a multitone field")),
        }
    }

    /// Points where `f` changes character inside `[0, t_end]`, for seeding
    /// quadrature partitions.
    pub fn feature_times(&self, t_end: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match self {
            FieldModel::Multitone(tones) => {
                let fmax = tones.iter().map(|t| t.freq_hz).fold(0.0, f64::max);
                let pieces = ((t_end * fmax * 8.0).ceil() as usize).clamp(1, 100_000);
                out.extend((1..pieces).map(|k| t_end * k as f64 / pieces as f64));
            }
            &FieldModel::GaussianTrain { sigma, period, reps } => {
                for i in Self::train_indices(sigma, period, reps, 0.0, t_end) {
                    let c = i as f64 * period;
                    for k in -4..=4 {
                        let x = c + 2.0 * sigma * k as f64;
                        if x > 0.0 && x < t_end {
                            out.push(x);
                        }
                    }
                }
            }
            &FieldModel::SingleGaussian { sigma, center } => {
                for k in -8..=8 {
                    let x = center + sigma * k as f64;
                    if x > 0.0 && x < t_end {
                        out.push(x);
                    }
                }
            }
            FieldModel::Tabulated(tab) => {
                let n = ((t_end / tab.step).floor() as usize).min(tab.values.len() - 1);
                out.extend((1..=n).map(|k| k as f64 * tab.step).filter(|&x| x < t_end));
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_with_breaks, QuadOptions};

    fn fig3() -> FieldModel {
        FieldModel::multitone_shared_phase(&[0.45, 0.43, 0.12], &[77e3, 96e3, 141e3], 0.0).unwrap()
    }

    fn quadrature(field: &FieldModel, t: f64) -> f64 {
        let mut breaks = vec![0.0];
        breaks.extend(field.feature_times(t));
        breaks.push(t);
        let opts = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-14,
            max_intervals: 100_000,
        };
        integrate_with_breaks(|s| field.eval(s).unwrap(), &breaks, opts)
            .unwrap()
            .value
    }

    #[test]
    fn multitone_peak_at_origin() {
        assert!((fig3().eval(0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(FieldModel::multitone_shared_phase(&[0.5, 0.4], &[1e3, 2e3], 0.0).is_err());
        assert!(FieldModel::multitone(vec![]).is_err());
        assert!(FieldModel::monochromatic(-1.0, 0.0).is_err());
    }

    #[test]
    fn single_gaussian_peak() {
        let f = FieldModel::single_gaussian(150e-6, 300e-6).unwrap();
        assert_eq!(f.eval(300e-6).unwrap(), 1.0);
    }

    #[test]
    fn gaussian_train_matches_direct_sum() {
        let (sigma, period, reps) = (1e-6, 10e-6, 100usize);
        let f = FieldModel::gaussian_train(sigma, period, reps).unwrap();
        for &t in &[5e-6, 0.0, 10e-6, 13.7e-6, 999e-6] {
            let direct: f64 = (0..=reps)
                .map(|i| {
                    let d = t - i as f64 * period;
                    (-d * d / (2.0 * sigma * sigma)).exp()
                })
                .sum();
            let got = f.eval(t).unwrap();
            assert!(
                (got - direct).abs() <= 1e-14 * (1.0 + direct),
                "t={t}: {got} vs {direct}"
            );
        }
    }

    #[test]
    fn running_mean_limits() {
        let f = fig3();
        assert_eq!(f.mean_integral(0.0).unwrap(), f.eval(0.0).unwrap());
        assert!((f.mean_integral(1e-12).unwrap() - 1.0).abs() < 1e-9);
        let tone = FieldModel::monochromatic(20.5e3, 0.0).unwrap();
        assert!(tone.mean_integral(1.0 / 20.5e3).unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_gaussian_mean_integral_matches_quadrature() {
        let f = FieldModel::single_gaussian(150e-6, 300e-6).unwrap();
        let t = 600e-6;
        let q = quadrature(&f, t);
        let got = f.mean_integral(t).unwrap() * t;
        assert!((got - q).abs() <= 1e-10 * (1.0 + q.abs()));
    }

    #[test]
    fn closed_forms_agree_with_quadrature() {
        let fields = vec![
            fig3(),
            FieldModel::multitone(vec![
                Tone {
                    weight: 0.7,
                    freq_hz: 12e3,
                    phase_rad: 0.4,
                },
                Tone {
                    weight: 0.3,
                    freq_hz: 51e3,
                    phase_rad: -1.3,
                },
            ])
            .unwrap(),
            FieldModel::gaussian_train(2e-6, 11.2e-6, 200).unwrap(),
            FieldModel::gaussian_train(0.5e-6, 10e-6, 3).unwrap(),
            FieldModel::single_gaussian(150e-6, 300e-6).unwrap(),
            FieldModel::single_gaussian(5e-6, -2e-6).unwrap(),
            FieldModel::tabulated(
                &(0..50).map(|k| k as f64 * 2e-6).collect::<Vec<_>>(),
                &(0..50).map(|k| ((k as f64) * 0.3).sin()).collect::<Vec<_>>(),
            )
            .unwrap(),
        ];
        for f in &fields {
            for &t in &[1e-6, 7.3e-6, 33e-6, 97.9e-6] {
                let q = quadrature(f, t);
                let got = f.integral(t).unwrap();
                assert!((got - q).abs() <= 1e-10 * (1.0 + q.abs()), "{f:?} t={t}: {got} vs {q}");
            }
        }
    }

    #[test]
    fn train_is_symmetric_about_interior_pulses() {
        let f = FieldModel::gaussian_train(2e-6, 11.2e-6, 100).unwrap();
        for i in [5usize, 20, 50] {
            let c = i as f64 * 11.2e-6;
            for k in 0..=10 {
                let d = 5.6e-6 * k as f64 / 10.0;
                let (a, b) = (f.eval(c + d).unwrap(), f.eval(c - d).unwrap());
                assert!((a - b).abs() <= 1e-12, "i={i} d={d}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn tabulated_rejects_out_of_range() {
        let f = FieldModel::tabulated(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(f.eval(2.5), Err(Error::OutOfDomain { .. })));
        assert!((f.eval(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((f.integral(2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(FieldModel::tabulated(&[0.0, 1.0, 3.0], &[0.0; 3]).is_err());
        assert!(FieldModel::tabulated(&[1.0, 2.0], &[0.0; 2]).is_err());
    }

    #[test]
    fn phase_shift_moves_every_tone() {
        let f = fig3().with_phase_shift(0.3).unwrap();
        if let FieldModel::Multitone(tones) = f {
            assert!(tones.iter().all(|t| (t.phase_rad - 0.3).abs() < 1e-15));
        } else {
            unreachable!()
        }
        assert!(FieldModel::single_gaussian(1.0, 0.0)
            .unwrap()
            .with_phase_shift(0.1)
            .is_err());
    }
}
