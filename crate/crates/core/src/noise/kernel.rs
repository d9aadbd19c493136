// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

//! Lag-domain evaluation of χ for repeated use inside optimizers.
//!
//! Writing `|ỹ(ω)|² = ω⁻² Σ_{k,l} c_k c_l cos(ω(t_k - t_l))` over the
//! switching times and using `Σ_k c_k = 0`,
//!
//! ```text
//! χ = Σ_{k,l} c_k c_l H(t_k - t_l),   H(Δ) = -½ ∫₀^|Δ| (|Δ| - u) C(u) du
//! ```
//!
//! where `C` is the phase-rate autocovariance. The kernel tabulates the
//! cumulative integrals `∫₀ C` and `∫₀ uC` on a grid fine enough for an
//! eight-point Gauss rule per cell, and evaluates the remainder up to an
//! arbitrary lag with one more Gauss rule. Cost per sequence is
//! `O((n + 2)²)` autocovariance evaluations, independent of `T` and of the
//! spectral bandwidth.

use crate::control::PulseSequence;
use crate::error::{invalid, Result};
use crate::quad::gl8;

use super::{Decoherence, NoiseSpectrum};

/// Grid cell size in units of the inverse highest frequency.
const CELL_PHASE: f64 = 1.0;
const MAX_CELLS: usize = 20_000_000;

#[derive(Debug, Clone)]
pub struct CoherenceKernel {
    spectrum: NoiseSpectrum,
    step: f64,
    max_lag: f64,
    /// `∫₀^{mh} C(u) du`
    c0: Vec<f64>,
    /// `∫₀^{mh} u C(u) du`
    c1: Vec<f64>,
}

impl CoherenceKernel {
    /// Kernel valid for sequences with `T ≤ max_lag`.
    pub fn new(spectrum: &NoiseSpectrum, max_lag: f64) -> Result<Self> {
        if !(max_lag > 0.0 && max_lag.is_finite()) {
            return Err(invalid(format!("kernel lag range must be positive, got {max_lag}")));
        }
        let spectrum = spectrum.clone();
        let top = spectrum.max_frequency();
        let mut step = if top > 0.0 { CELL_PHASE / top } else { max_lag };
        // gaussian envelopes decay on the scale 1/σ
        if let Some(lines) = spectrum.lines() {
            for l in lines.iter().filter(|l| l.amplitude > 0.0) {
                step = step.min(CELL_PHASE / l.width);
            }
        }
        let cells = (max_lag / step).ceil() as usize;
        if cells > MAX_CELLS {
            return Err(invalid(format!(
                "kernel would need {cells} cells; reduce the lag range or spectral bandwidth"
            )));
        }
        let cells = cells.max(1);
        let step = max_lag / cells as f64;
        let mut c0 = Vec::with_capacity(cells + 2);
        let mut c1 = Vec::with_capacity(cells + 2);
        let (mut a0, mut a1) = (0.0, 0.0);
        c0.push(0.0);
        c1.push(0.0);
        // one spare cell so lags at the upper edge still find a left node
        for m in 0..=cells {
            let lo = m as f64 * step;
            let hi = lo + step;
            a0 += gl8(|u| spectrum.autocovariance(u), lo, hi);
            a1 += gl8(|u| u * spectrum.autocovariance(u), lo, hi);
            c0.push(a0);
            c1.push(a1);
        }
        Ok(Self {
            spectrum,
            step,
            max_lag,
            c0,
            c1,
        })
    }

    pub fn spectrum(&self) -> &NoiseSpectrum {
        &self.spectrum
    }

    pub fn max_lag(&self) -> f64 {
        self.max_lag
    }

    /// `H(Δ)`.
    pub fn lag_kernel(&self, lag: f64) -> f64 {
        let d = lag.abs();
        let m = ((d / self.step) as usize).min(self.c0.len() - 1);
        let node = m as f64 * self.step;
        let (mut i0, mut i1) = (self.c0[m], self.c1[m]);
        if d > node {
            i0 += gl8(|u| self.spectrum.autocovariance(u), node, d);
            i1 += gl8(|u| u * self.spectrum.autocovariance(u), node, d);
        }
        -0.5 * (d * i0 - i1)
    }
}

impl Decoherence for CoherenceKernel {
    fn chi(&self, seq: &PulseSequence) -> Result<f64> {
        if seq.duration() > self.max_lag * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "sequence length {} s exceeds the kernel range {} s",
                seq.duration(),
                self.max_lag
            )));
        }
        if self.spectrum.is_zero() {
            return Ok(0.0);
        }
        let sw = seq.switching_weights();
        let mut acc = 0.0;
        for (k, &(tk, ck)) in sw.iter().enumerate() {
            for &(tl, cl) in &sw[k + 1..] {
                acc += ck * cl * self.lag_kernel(tl - tk);
            }
        }
        Ok((2.0 * acc).max(0.0))
    }
}
