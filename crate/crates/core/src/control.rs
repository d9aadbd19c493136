// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

//! Instantaneous π-pulse sequences, their ±1 modulation function and its
//! Fourier transform.
//!
//! Convention: `ỹ(ω) = ∫₀ᵀ y(t) e^{-iωt} dt`. Only `|ỹ|²` enters the physics.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Below this `|ω|T` the transform switches to its Taylor series.
const SERIES_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    duration: f64,
    pulses: Vec<f64>,
    /// intervals the sequence was built from, kept so the round trip is exact
    intervals: Option<Vec<f64>>,
}

/// Pulse-centered window durations `τ_j`; pulse `j` sits in the middle of
/// window `j` and the windows tile `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricIntervals(Vec<f64>);

impl SymmetricIntervals {
    pub fn new(tau: Vec<f64>) -> Result<Self> {
        if let Some((j, t)) = tau.iter().enumerate().find(|(_, t)| !(**t > 0.0 && t.is_finite())) {
            return Err(invalid(format!("interval {j} must be positive, got {t}")));
        }
        Ok(Self(tau))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Windows that center each of `pulses` in turn, starting at 0. The
    /// total is implied by the last pulse.
    pub fn from_pulse_times(pulses: &[f64]) -> Result<Self> {
        if pulses.is_empty() {
            return Err(invalid("a pulse-free sequence has no symmetric intervals"));
        }
        let mut tau = Vec::with_capacity(pulses.len());
        let mut start = 0.0;
        for &t in pulses {
            let w = 2.0 * (t - start);
            if !(w > 0.0) {
                return Err(invalid("pulses are not centered in their windows"));
            }
            tau.push(w);
            start += w;
        }
        Self::new(tau)
    }

    /// Scale every interval so they sum to `total`.
    pub fn rescaled(&self, total: f64) -> Result<Self> {
        let k = total / self.total();
        Self::new(self.0.iter().map(|t| t * k).collect())
    }
}

/// A constant-sign stretch of the modulation function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub sign: f64,
}

impl PulseSequence {
    pub fn new(duration: f64, pulses: Vec<f64>) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(invalid(format!("sequence duration must be positive, got {duration}")));
        }
        let mut prev = 0.0;
        for (j, &t) in pulses.iter().enumerate() {
            if !(t > prev) {
                return Err(invalid(format!("pulse {j} at {t} s is not after {prev} s")));
            }
            prev = t;
        }
        if !pulses.is_empty() && !(prev < duration) {
            return Err(invalid(format!(
                "last pulse at {prev} s is not before T = {duration} s"
            )));
        }
        Ok(Self {
            duration,
            pulses,
            intervals: None,
        })
    }

    /// Ramsey free evolution: no pulses.
    pub fn free_evolution(duration: f64) -> Result<Self> {
        Self::new(duration, Vec::new())
    }

    /// Carr-Purcell: `n` pulses at `(j - ½)τ`, `T = nτ`.
    pub fn cp(n: usize, tau: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("CP needs at least one pulse"));
        }
        if !(tau > 0.0) {
            return Err(invalid(format!("CP spacing must be positive, got {tau}")));
        }
        Self::from_symmetric_intervals(&SymmetricIntervals(vec![tau; n]))
    }

    pub fn from_symmetric_intervals(tau: &SymmetricIntervals) -> Result<Self> {
        if tau.is_empty() {
            return Err(invalid("at least one interval is needed"));
        }
        let mut pulses = Vec::with_capacity(tau.len());
        let mut start = 0.0;
        for &t in &tau.0 {
            pulses.push(start + 0.5 * t);
            start += t;
        }
        let mut seq = Self::new(start, pulses)?;
        seq.intervals = Some(tau.0.clone());
        Ok(seq)
    }

    /// Recover the pulse-centered windows. Fails when the pulses cannot be
    /// centered in windows tiling `[0, T]`.
    pub fn to_symmetric_intervals(&self) -> Result<SymmetricIntervals> {
        if let Some(tau) = &self.intervals {
            return Ok(SymmetricIntervals(tau.clone()));
        }
        let tau = SymmetricIntervals::from_pulse_times(&self.pulses)?;
        let end = tau.total();
        if (end - self.duration).abs() > 1e-9 * self.duration {
            return Err(invalid(format!(
                "centered windows end at {end} s instead of T = {} s",
                self.duration
            )));
        }
        Ok(tau)
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn pulses(&self) -> &[f64] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// Smallest gap between consecutive pulses, or between a pulse and the
    /// window edges 0 and T.
    pub fn min_gap(&self) -> f64 {
        let mut prev = 0.0;
        let mut gap = f64::INFINITY;
        for &t in self.pulses.iter().chain(std::iter::once(&self.duration)) {
            gap = gap.min(t - prev);
            prev = t;
        }
        gap
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.pulses.len();
        (0..=n).map(move |j| Segment {
            start: if j == 0 { 0.0 } else { self.pulses[j - 1] },
            end: if j == n { self.duration } else { self.pulses[j] },
            sign: if j % 2 == 0 { 1.0 } else { -1.0 },
        })
    }

    /// Switching times `0, t_1, …, t_n, T` with weights `1, 2(-1)^j, -(-1)^n`.
    /// `ỹ(ω) = (iω)⁻¹ Σ_k c_k e^{-iωt_k}` and `Σ_k c_k = 0`.
    pub fn switching_weights(&self) -> Vec<(f64, f64)> {
        let n = self.pulses.len();
        let mut out = Vec::with_capacity(n + 2);
        out.push((0.0, 1.0));
        for (j, &t) in self.pulses.iter().enumerate() {
            out.push((t, if j % 2 == 0 { -2.0 } else { 2.0 }));
        }
        out.push((self.duration, if n % 2 == 0 { -1.0 } else { 1.0 }));
        out
    }

    /// `y(t) = (-1)^j` with `j` the number of pulses at or before `t`.
    pub fn modulation_at(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t <= self.duration) {
            return Err(Error::OutOfDomain {
                what: "t",
                value: t,
                lo: 0.0,
                hi: self.duration,
            });
        }
        let passed = self.pulses.partition_point(|&p| p <= t);
        Ok(if passed % 2 == 0 { 1.0 } else { -1.0 })
    }

    /// Signed time balance `ỹ(0) = ∫ y dt`.
    pub fn time_balance(&self) -> f64 {
        self.segments().map(|s| s.sign * (s.end - s.start)).sum()
    }

    /// `ỹ(ω) = ∫₀ᵀ y(t) e^{-iωt} dt`, units of seconds.
    pub fn fourier_transform(&self, omega: f64) -> Complex64 {
        if omega.abs() * self.duration < SERIES_THRESHOLD {
            return self.fourier_series(omega);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, c) in self.switching_weights() {
            let (s, co) = (omega * t).sin_cos();
            acc += c * Complex64::new(co, -s);
        }
        acc / Complex64::new(0.0, omega)
    }

    /// Four-term expansion `Σ_m (-iω)^m M_m / m!` with `M_m = ∫ y t^m dt`.
    fn fourier_series(&self, omega: f64) -> Complex64 {
        let mut moments = [0.0f64; 4];
        for seg in self.segments() {
            let (mut pa, mut pb) = (seg.start, seg.end);
            for (m, slot) in moments.iter_mut().enumerate() {
                *slot += seg.sign * (pb - pa) / (m + 1) as f64;
                pa *= seg.start;
                pb *= seg.end;
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        let mut factor = Complex64::new(1.0, 0.0);
        let step = Complex64::new(0.0, -omega);
        for (m, mom) in moments.iter().enumerate() {
            if m > 0 {
                factor *= step / m as f64;
            }
            acc += factor * *mom;
        }
        acc
    }

    /// `|ỹ(ω)|²`.
    pub fn filter(&self, omega: f64) -> f64 {
        self.fourier_transform(omega).norm_sqr()
    }
}

/// Closed-form CP filter
/// `[sin(πνT)/(πνT) · (1 - sec(πνT/n)) · cos(πνT + α)]²` for even `n`.
/// Odd `n` makes `y` antisymmetric about `T/2`, which swaps the roles:
/// `[cos(πνT)/(πνT) · (1 - sec(πνT/n)) · sin(πνT + α)]²`.
///
/// Dimensionless; `T² ·` this value equals `(∫ y cos(2πνt + α) dt)²`, so
/// `T² [ref(α) + ref(α + π/2)] = |ỹ(2πν)|²` for any `α`.
pub fn cp_filter_reference(n: usize, duration: f64, nu: f64, alpha: f64) -> Result<f64> {
    if n == 0 || !(duration > 0.0) || !(nu > 0.0) {
        return Err(invalid("cp_filter_reference needs n >= 1, T > 0, nu > 0"));
    }
    let x = PI * nu * duration;
    let half = x / n as f64;
    let c = half.cos();
    // odd multiples of π/2 put the secant on a pole
    if c.abs() < 1e-12 {
        return Err(Error::Pole { nu });
    }
    let v = if n % 2 == 0 {
        x.sin() / x * (1.0 - 1.0 / c) * (x + alpha).cos()
    } else {
        x.cos() / x * (1.0 - 1.0 / c) * (x + alpha).sin()
    };
    Ok(v * v)
}
