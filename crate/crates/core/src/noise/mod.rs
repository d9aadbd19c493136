// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

//! Dephasing noise: spectral density, the decoherence exponent χ and the
//! CP-decay noise spectroscopy pipeline.
//!
//! Normalization used throughout the crate:
//!
//! ```text
//! χ = (1/2π) ∫₀^∞ S(ω) |ỹ(ω)|² dω
//! ```
//!
//! with `S` the two-sided PSD of the phase rate (s⁻¹) and `ỹ` the transform of
//! the modulation function. It equals half the variance of the random phase
//! `δφ = ∫ β(t) y(t) dt`, so a gaussian bath gives coherence `e^{-χ}`, and for
//! CP with many pulses it reduces to `χ/T → (4/π²) S(π/τ)`.

mod kernel;
mod spectroscopy;
mod spectrum;

use std::f64::consts::PI;

pub use kernel::CoherenceKernel;
pub use spectroscopy::{
    fit_decay, fit_spectrum_from_decays, spectrum_from_t2, t2_from_spectrum, DecayCurve, DecayFit, DecayPoint,
    SpectrumEstimate,
};
pub use spectrum::{GaussianLine, NoiseSpectrum};

use crate::control::PulseSequence;
use crate::error::Result;
use crate::quad::{integrate_with_breaks, QuadOptions};

/// Panels per filter lobe (lobe spacing `2π/T`).
const PANELS_PER_LOBE: f64 = 8.0;

/// Anything that can report the decoherence exponent of a sequence.
pub trait Decoherence: Sync {
    fn chi(&self, seq: &PulseSequence) -> Result<f64>;
}

impl Decoherence for NoiseSpectrum {
    fn chi(&self, seq: &PulseSequence) -> Result<f64> {
        coherence_chi(seq, self)
    }
}

impl<D: Decoherence + ?Sized> Decoherence for &D {
    fn chi(&self, seq: &PulseSequence) -> Result<f64> {
        (**self).chi(seq)
    }
}

/// The lag-domain kernel when its table fits in memory, frequency
/// quadrature otherwise.
#[derive(Debug, Clone)]
pub enum ChiEngine {
    Quadrature(NoiseSpectrum),
    Kernel(CoherenceKernel),
}

impl ChiEngine {
    /// Engine for sequences no longer than `max_duration`.
    pub fn new(spec: &NoiseSpectrum, max_duration: f64) -> Self {
        if spec.is_zero() {
            return Self::Quadrature(spec.clone());
        }
        match CoherenceKernel::new(spec, max_duration) {
            Ok(k) => Self::Kernel(k),
            Err(_) => Self::Quadrature(spec.clone()),
        }
    }

    pub fn spectrum(&self) -> &NoiseSpectrum {
        match self {
            Self::Quadrature(s) => s,
            Self::Kernel(k) => k.spectrum(),
        }
    }
}

impl Decoherence for ChiEngine {
    fn chi(&self, seq: &PulseSequence) -> Result<f64> {
        match self {
            Self::Quadrature(s) => s.chi(seq),
            Self::Kernel(k) if seq.duration() <= k.max_lag() => k.chi(seq),
            Self::Kernel(k) => k.spectrum().chi(seq),
        }
    }
}

/// Tolerances for [`coherence_chi_with`].
#[derive(Debug, Clone, Copy)]
pub struct ChiOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for ChiOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-6,
        }
    }
}

/// `χ` by adaptive quadrature in the frequency domain.
pub fn coherence_chi(seq: &PulseSequence, spec: &NoiseSpectrum) -> Result<f64> {
    coherence_chi_with(seq, spec, ChiOptions::default())
}

pub fn coherence_chi_with(seq: &PulseSequence, spec: &NoiseSpectrum, opts: ChiOptions) -> Result<f64> {
    if spec.is_zero() {
        return Ok(0.0);
    }
    let panel = (PI / (PANELS_PER_LOBE / 2.0 * seq.duration())).min(0.5 * spec.finest_scale());
    let features = spec.feature_frequencies();
    let quad = QuadOptions {
        abs_tol: opts.abs_tol,
        rel_tol: opts.rel_tol,
        max_intervals: 2_000_000,
    };
    let mut total = 0.0;
    for (lo, hi) in spec.support() {
        let pieces = ((hi - lo) / panel).ceil().max(1.0) as usize;
        let mut breaks: Vec<f64> = (0..=pieces)
            .map(|k| lo + (hi - lo) * k as f64 / pieces as f64)
            .collect();
        breaks.extend(features.iter().copied().filter(|&w| w > lo && w < hi));
        breaks.sort_by(f64::total_cmp);
        let r = integrate_with_breaks(|w| spec.eval(w) * seq.filter(w), &breaks, quad)?;
        total += r.value;
    }
    Ok((total / (2.0 * PI)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::SymmetricIntervals;

    #[test]
    fn zero_spectrum_gives_zero() {
        let s = PulseSequence::cp(8, 5e-6).unwrap();
        assert_eq!(coherence_chi(&s, &NoiseSpectrum::zero()).unwrap(), 0.0);
    }

    #[test]
    fn linear_in_spectrum() {
        let s = PulseSequence::cp(10, 4e-6).unwrap();
        let spec = NoiseSpectrum::single_line(2e4, 6e5, 1e5).unwrap();
        let a = coherence_chi(&s, &spec).unwrap();
        let b = coherence_chi(&s, &spec.scaled(3.7).unwrap()).unwrap();
        assert!((b - 3.7 * a).abs() <= 1e-6 * b);
    }

    #[test]
    fn ramsey_with_low_frequency_noise_is_finite() {
        // an unbalanced sequence stays integrable: ỹ(0) = T is finite
        let s = PulseSequence::free_evolution(10e-6).unwrap();
        let spec = NoiseSpectrum::single_line(1e4, 0.0, 1e4).unwrap();
        let chi = coherence_chi(&s, &spec).unwrap();
        // quasi-static limit: χ = T² C(0) / 2
        let want = 0.5 * 1e-10 * spec.variance();
        assert!(((chi - want) / want).abs() < 1e-2, "{chi} vs {want}");
    }

    #[test]
    fn narrow_line_scales_quadratically_in_time() {
        // a line narrower than the filter lobe: χ ≈ |ỹ(ω₀)|² ∫S / 2π
        let tau = 5e-6;
        let w0 = PI / tau;
        let s = PulseSequence::cp(50, tau).unwrap();
        let spec = NoiseSpectrum::single_line(1e3, w0, 1e-4 * w0).unwrap();
        let chi = coherence_chi(&s, &spec).unwrap();
        let area = 1e3 * 1e-4 * w0 * (2.0 * PI).sqrt();
        let want = s.filter(w0) * area / (2.0 * PI);
        assert!(((chi - want) / want).abs() < 1e-3, "{chi} vs {want}");
    }

    #[test]
    fn nonuniform_sequence_positive() {
        let tau = SymmetricIntervals::new(vec![3e-6, 1e-6, 5e-6, 2e-6, 2e-6]).unwrap();
        let s = PulseSequence::from_symmetric_intervals(&tau).unwrap();
        let spec = NoiseSpectrum::single_line(5e3, 4e5, 2e5).unwrap();
        assert!(coherence_chi(&s, &spec).unwrap() > 0.0);
    }
}
