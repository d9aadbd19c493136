// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

//! Phase accumulation, readout signal, Fisher information and the
//! sensitivity cost `η = e^χ √T / |φ|`.

use std::f64::consts::TAU;

use crate::control::PulseSequence;
use crate::error::{invalid, Error, Result};
use crate::field::FieldModel;
use crate::fit::polyfit;
use crate::noise::Decoherence;

/// NV electron gyromagnetic ratio, Hz/µT.
pub const NV_GYROMAGNETIC_RATIO: f64 = 2.81e4;

/// Radians per cycle: `γ` in Hz/µT times time gives cycles; the signal
/// consumes radians.
pub const PHASE_PER_CYCLE: f64 = TAU;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorParams {
    /// Hz/µT
    pub gamma: f64,
    /// rad per cycle
    pub kappa: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            gamma: NV_GYROMAGNETIC_RATIO,
            kappa: PHASE_PER_CYCLE,
        }
    }
}

impl SensorParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("gyromagnetic ratio must be positive, got {gamma}")));
        }
        Ok(Self {
            gamma,
            kappa: PHASE_PER_CYCLE,
        })
    }

    /// Phase rate per unit field, rad/(s·µT).
    pub fn coupling(&self) -> f64 {
        self.kappa * self.gamma
    }
}

/// One row of a sensitivity evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityReport {
    /// s
    pub duration: f64,
    /// rad/µT
    pub phase: f64,
    pub chi: f64,
    /// µT/√Hz, infinite when `phase == 0`
    pub eta: f64,
    /// µT⁻², at the optimal bias point
    pub fisher_per_shot: f64,
    /// µT⁻¹, `½ e^{-χ} |φ|`
    pub max_slope: f64,
}

impl SensitivityReport {
    pub fn is_blind(&self) -> bool {
        self.eta.is_infinite()
    }

    /// Smallest detectable amplitude after `shots` repetitions,
    /// `η / √(N T)`.
    pub fn min_detectable_field(&self, shots: u64) -> f64 {
        self.eta / (shots as f64 * self.duration).sqrt()
    }
}

/// Phase per unit amplitude,
/// `φ = κγ [(-1)^n P(T) - 2 Σ_j (-1)^j P(t_j)]` with `P(t) = t F(t)`.
///
/// Positive for free evolution in a constant positive field.
pub fn accumulated_phase(seq: &PulseSequence, field: &FieldModel, params: &SensorParams) -> Result<f64> {
    let n = seq.len();
    let mut acc = if n % 2 == 0 { 1.0 } else { -1.0 } * field.integral(seq.duration())?;
    for (j, &t) in seq.pulses().iter().enumerate() {
        // pulse j is the (j+1)-th, sign (-1)^{j+1}
        let p = field.integral(t)?;
        acc += if j % 2 == 0 { 2.0 * p } else { -2.0 * p };
    }
    Ok(params.coupling() * acc)
}

/// `s = ½(1 + e^{-χ} cos(φ b))`.
pub fn signal(
    seq: &PulseSequence,
    field: &FieldModel,
    noise: &impl Decoherence,
    b: f64,
    params: &SensorParams,
) -> Result<f64> {
    let phi = accumulated_phase(seq, field, params)?;
    let chi = noise.chi(seq)?;
    Ok(signal_from(phi, chi, b))
}

fn signal_from(phi: f64, chi: f64, b: f64) -> f64 {
    0.5 * (1.0 + (-chi).exp() * (phi * b).cos())
}

/// Fisher information of one binary readout at field `b`,
/// `(∂_b s)² / (s(1 - s))`.
pub fn fisher_per_shot(
    seq: &PulseSequence,
    field: &FieldModel,
    noise: &impl Decoherence,
    b: f64,
    params: &SensorParams,
) -> Result<f64> {
    let phi = accumulated_phase(seq, field, params)?;
    let chi = noise.chi(seq)?;
    fisher_from(phi, chi, b)
}

fn fisher_from(phi: f64, chi: f64, b: f64) -> Result<f64> {
    let s = signal_from(phi, chi, b);
    let q = s * (1.0 - s);
    if !(q > 0.0) {
        return Err(Error::DegenerateOutcome(format!("signal {s} is deterministic")));
    }
    let slope = -0.5 * (-chi).exp() * phi * (phi * b).sin();
    Ok(slope * slope / q)
}

/// Bias field placing the readout at `s = ½`, `φ b = π/2`.
pub fn optimal_bias(phase: f64) -> Option<f64> {
    (phase != 0.0).then(|| std::f64::consts::FRAC_PI_2 / phase)
}

pub fn sensitivity(
    seq: &PulseSequence,
    field: &FieldModel,
    noise: &impl Decoherence,
    params: &SensorParams,
) -> Result<SensitivityReport> {
    let phase = accumulated_phase(seq, field, params)?;
    let chi = noise.chi(seq)?;
    Ok(report_from(seq.duration(), phase, chi))
}

pub(crate) fn report_from(duration: f64, phase: f64, chi: f64) -> SensitivityReport {
    let decay = (-chi).exp();
    let eta = if phase == 0.0 {
        f64::INFINITY
    } else {
        duration.sqrt() / (decay * phase.abs())
    };
    SensitivityReport {
        duration,
        phase,
        chi,
        eta,
        fisher_per_shot: decay * decay * phase * phase,
        max_slope: 0.5 * decay * phase.abs(),
    }
}

/// Outcome of [`calibrate_c`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub c: f64,
    pub c_err: f64,
    /// fitted peak of the measured observable
    pub e_max: f64,
    pub e_max_err: f64,
    /// `T` of the fitted peak
    pub t_peak: f64,
    pub eta_min: f64,
}

impl Calibration {
    /// Predicted observable `C/η` and its uncertainty.
    pub fn predict(&self, eta: f64) -> (f64, f64) {
        (self.c / eta, self.c_err / eta)
    }
}

/// Points on either side of the measured maximum used for the peak fit.
const PEAK_HALF_WINDOW: usize = 2;

/// `C = E_max · η_min` from measured `(T, E)` and theoretical `(T, η)`.
///
/// `E_max` comes from a parabola fitted to the measured points around their
/// maximum; its standard error propagates to `ΔC`.
pub fn calibrate_c(measured: &[(f64, f64)], theory: &[(f64, f64)]) -> Result<Calibration> {
    if measured.is_empty() || theory.is_empty() {
        return Err(invalid("calibration needs measured and theoretical points"));
    }
    let mut meas = measured.to_vec();
    meas.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (t_lo, t_hi) = (meas[0].0, meas[meas.len() - 1].0);
    let (th_lo, th_hi) = theory.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.0), hi.max(p.0))
    });
    if th_hi < t_lo || th_lo > t_hi {
        return Err(invalid("measured and theoretical T ranges do not overlap"));
    }
    let eta_min = theory
        .iter()
        .map(|p| p.1)
        .filter(|e| e.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !(eta_min > 0.0 && eta_min.is_finite()) {
        return Err(Error::Calibration("no finite theoretical sensitivity".into()));
    }

    let imax = meas
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap();
    if imax == 0 || imax == meas.len() - 1 {
        return Err(Error::Calibration(
            "measured maximum sits at the edge of the T range".into(),
        ));
    }
    let lo = imax.saturating_sub(PEAK_HALF_WINDOW);
    let hi = (imax + PEAK_HALF_WINDOW + 1).min(meas.len());
    let window = &meas[lo..hi];
    if window.len() < 3 {
        return Err(Error::Calibration("too few points around the maximum".into()));
    }
    // center and scale T for conditioning
    let t0 = meas[imax].0;
    let scale = window.iter().map(|p| (p.0 - t0).abs()).fold(0.0, f64::max);
    let x: Vec<f64> = window.iter().map(|p| (p.0 - t0) / scale).collect();
    let y: Vec<f64> = window.iter().map(|p| p.1).collect();
    let (coef, cov) = polyfit(&x, &y, 2)?;
    let (a0, a1, a2) = (coef[0], coef[1], coef[2]);
    if !(a2 < 0.0) {
        return Err(Error::Calibration("measured data have no interior maximum".into()));
    }
    let xv = -a1 / (2.0 * a2);
    if !(x[0]..=x[x.len() - 1]).contains(&xv) {
        return Err(Error::Calibration("fitted peak falls outside the data".into()));
    }
    let e_max = a0 - a1 * a1 / (4.0 * a2);
    // gradient of the vertex value with respect to (a0, a1, a2)
    let g = [1.0, -a1 / (2.0 * a2), a1 * a1 / (4.0 * a2 * a2)];
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += g[i] * cov[(i, j)] * g[j];
        }
    }
    let e_max_err = var.max(0.0).sqrt();
    Ok(Calibration {
        c: e_max * eta_min,
        c_err: e_max_err * eta_min,
        e_max,
        e_max_err,
        t_peak: t0 + xv * scale,
        eta_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseSpectrum;
    use std::f64::consts::PI;

    fn params() -> SensorParams {
        SensorParams::default()
    }

    fn constant_field(t_end: f64) -> FieldModel {
        FieldModel::tabulated(&[0.0, t_end], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn ramsey_constant_field() {
        let t = 10e-6;
        let seq = PulseSequence::free_evolution(t).unwrap();
        let phi = accumulated_phase(&seq, &constant_field(t), &params()).unwrap();
        assert!((phi - TAU * 2.81e4 * t).abs() < 1e-12);
        assert!((phi - 1.7656).abs() < 1e-4);
    }

    #[test]
    fn synchronized_cp_gives_two_over_pi() {
        let nu = 20.5e3;
        let seq = PulseSequence::cp(8, 1.0 / (2.0 * nu)).unwrap();
        let f = FieldModel::monochromatic(nu, 0.0).unwrap();
        let phi = accumulated_phase(&seq, &f, &params()).unwrap();
        let ratio = phi / (params().coupling() * seq.duration());
        assert!((ratio.abs() - 2.0 / PI).abs() < 1e-9, "{ratio}");
    }

    #[test]
    fn signal_special_points() {
        let seq = PulseSequence::cp(4, 5e-6).unwrap();
        let f = FieldModel::monochromatic(1e5, 0.0).unwrap();
        let spec = NoiseSpectrum::single_line(3e4, PI / 5e-6, 2e5).unwrap();
        let p = params();
        let chi = spec.chi(&seq).unwrap();
        let phi = accumulated_phase(&seq, &f, &p).unwrap();
        let s0 = signal(&seq, &f, &spec, 0.0, &p).unwrap();
        assert!((s0 - 0.5 * (1.0 + (-chi).exp())).abs() < 1e-15);
        let s_pi = signal(&seq, &f, &spec, PI / phi, &p).unwrap();
        assert!((s_pi - 0.5 * (1.0 - (-chi).exp())).abs() < 1e-14);
        let quiet = NoiseSpectrum::zero();
        let s_half = signal(&seq, &f, &quiet, optimal_bias(phi).unwrap(), &p).unwrap();
        assert!((s_half - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fisher_special_points() {
        let seq = PulseSequence::cp(4, 5e-6).unwrap();
        let f = FieldModel::monochromatic(1e5, 0.0).unwrap();
        let p = params();
        let phi = accumulated_phase(&seq, &f, &p).unwrap();
        let quiet = NoiseSpectrum::zero();
        let fi = fisher_per_shot(&seq, &f, &quiet, optimal_bias(phi).unwrap(), &p).unwrap();
        assert!(((fi - phi * phi) / (phi * phi)).abs() < 1e-12);
        // noiseless b = 0 is a deterministic outcome
        assert!(matches!(
            fisher_per_shot(&seq, &f, &quiet, 0.0, &p),
            Err(Error::DegenerateOutcome(_))
        ));
        let noisy = NoiseSpectrum::single_line(3e4, PI / 5e-6, 2e5).unwrap();
        assert_eq!(fisher_per_shot(&seq, &f, &noisy, 0.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn sensitivity_unit_case_and_scaling() {
        let r = report_from(1.0, 1.0, 0.0);
        assert_eq!(r.eta, 1.0);
        let r2 = report_from(1.0, 2.0, 0.3);
        let r1 = report_from(1.0, 1.0, 0.3);
        assert!((r2.eta - 0.5 * r1.eta).abs() < 1e-15);
        assert!(report_from(1.0, 0.0, 0.1).is_blind());
        assert!((r1.min_detectable_field(100) - r1.eta / 10.0).abs() < 1e-15);
    }

    #[test]
    fn calibration_product_and_homogeneity() {
        let measured: Vec<(f64, f64)> = (0..9)
            .map(|k| {
                let t = 100e-6 + 10e-6 * k as f64;
                let x = (t - 140e-6) / 40e-6;
                (t, 2.0 - 0.8 * x * x)
            })
            .collect();
        let theory = vec![(100e-6, 5.0), (140e-6, 3.0), (180e-6, 4.0)];
        let cal = calibrate_c(&measured, &theory).unwrap();
        assert!((cal.c - 6.0).abs() < 1e-9, "{cal:?}");
        assert!((cal.t_peak - 140e-6).abs() < 1e-12);

        let scaled: Vec<(f64, f64)> = theory.iter().map(|&(t, e)| (t, 2.5 * e)).collect();
        let cal2 = calibrate_c(&measured, &scaled).unwrap();
        assert!((cal2.c - 2.5 * cal.c).abs() < 1e-9);
    }

    #[test]
    fn calibration_needs_an_interior_peak() {
        let rising: Vec<(f64, f64)> = (0..6).map(|k| (k as f64, k as f64)).collect();
        assert!(matches!(
            calibrate_c(&rising, &[(2.0, 1.0)]),
            Err(Error::Calibration(_))
        ));
        assert!(calibrate_c(&[], &[(1.0, 1.0)]).is_err());
        assert!(calibrate_c(&[(1.0, 1.0), (2.0, 2.0), (3.0, 1.0)], &[(10.0, 1.0)]).is_err());
    }
}
