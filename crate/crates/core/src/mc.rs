// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo check of the coherence model.
//!
//! The phase rate is synthesized as a sum of independent gaussian
//! quadratures on a uniform frequency grid,
//! `β(t) = Σ_k A_k cos ω_k t + B_k sin ω_k t` with
//! `A_k, B_k ~ N(0, S(ω_k) Δω / π)`, so its autocovariance approximates
//! `(1/π) ∫₀^∞ S(ω) cos ωu dω`. The random phase of a trajectory is
//! `δφ = Σ_k A_k ∫y cos ω_k t + B_k ∫y sin ω_k t`, with each integral
//! taken exactly over the constant-sign stretches of `y`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::control::PulseSequence;
use crate::error::{invalid, Error, Result};
use crate::noise::NoiseSpectrum;

/// Minimum number of frequency bins.
pub const MIN_BINS: usize = 512;
const MAX_BINS: usize = 2_000_000;
/// Bins per spectral line width.
const BINS_PER_WIDTH: f64 = 8.0;
/// Bins per filter lobe `2π/T`.
const BINS_PER_LOBE: f64 = 64.0;
const BOOTSTRAP_RESAMPLES: usize = 200;
/// Stream reserved for bootstrap resampling.
const BOOTSTRAP_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    /// path sampling step, s
    pub dt: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// highest synthesized frequency, rad/s
    pub omega_max: f64,
}

impl TrajectoryConfig {
    pub fn new(dt: f64, n_traj: usize, seed: u64, omega_max: f64) -> Result<Self> {
        let cfg = Self {
            dt,
            n_traj,
            seed,
            omega_max,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cutoff at the top of the spectrum's support and four samples per
    /// period of the highest frequency.
    pub fn for_spectrum(spec: &NoiseSpectrum, n_traj: usize, seed: u64) -> Result<Self> {
        let top = spec.max_frequency();
        let omega_max = if top > 0.0 { top } else { 1.0 };
        Self::new(0.5 * PI / omega_max, n_traj, seed, omega_max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_traj < 100 {
            return Err(invalid(format!("need at least 100 trajectories, got {}", self.n_traj)));
        }
        if !(self.omega_max > 0.0 && self.omega_max.is_finite()) {
            return Err(invalid(format!("cutoff must be positive, got {}", self.omega_max)));
        }
        if !(self.dt > 0.0) {
            return Err(invalid(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.dt < PI / self.omega_max) {
            return Err(Error::Resolution(format!(
                "time step {} s does not resolve the cutoff {} rad/s (needs dt < {} s)",
                self.dt,
                self.omega_max,
                PI / self.omega_max
            )));
        }
        Ok(())
    }
}

/// Frequency grid and per-bin quadrature variances for one spectrum and
/// one sequence length.
#[derive(Debug, Clone)]
pub struct Synthesis {
    omega: Vec<f64>,
    /// standard deviation of each quadrature
    scale: Vec<f64>,
}

impl Synthesis {
    pub fn new(spec: &NoiseSpectrum, cfg: &TrajectoryConfig, duration: f64) -> Result<Self> {
        cfg.validate()?;
        if !(duration > 0.0) {
            return Err(invalid(format!("duration must be positive, got {duration}")));
        }
        let mut omega = Vec::new();
        let mut scale = Vec::new();
        if spec.is_zero() {
            return Ok(Self { omega, scale });
        }
        let pieces: Vec<(f64, f64)> = spec
            .support()
            .into_iter()
            .filter(|s| s.0 < cfg.omega_max)
            .map(|(lo, hi)| (lo, hi.min(cfg.omega_max)))
            .collect();
        let span: f64 = pieces.iter().map(|p| p.1 - p.0).sum();
        let mut width = (spec.finest_scale() / BINS_PER_WIDTH).min(2.0 * PI / (BINS_PER_LOBE * duration));
        width = width.min(span / MIN_BINS as f64);
        let needed = (span / width).ceil();
        if needed > MAX_BINS as f64 {
            return Err(Error::Resolution(format!(
                "synthesis would need {needed} frequency bins; shorten the sequence or narrow the spectrum"
            )));
        }
        for (lo, hi) in pieces {
            let m = ((hi - lo) / width).ceil().max(1.0) as usize;
            let h = (hi - lo) / m as f64;
            for k in 0..m {
                let w = lo + (k as f64 + 0.5) * h;
                let s = spec.eval(w);
                if s > 0.0 {
                    omega.push(w);
                    scale.push((s * h / PI).sqrt());
                }
            }
        }
        Ok(Self { omega, scale })
    }

    pub fn bins(&self) -> usize {
        self.omega.len()
    }

    /// Variance of the synthesized process, `Σ_k σ_k²`.
    pub fn variance(&self) -> f64 {
        self.scale.iter().map(|s| s * s).sum()
    }

    fn rng(seed: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        rng
    }

    fn quadratures(&self, seed: u64, index: u64) -> Vec<(f64, f64)> {
        let mut rng = Self::rng(seed, index);
        self.scale
            .iter()
            .map(|s| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                (s * a, s * b)
            })
            .collect()
    }

    /// Trajectory `index` sampled at `0, dt, 2dt, … ≤ duration`.
    pub fn path(&self, seed: u64, index: u64, dt: f64, duration: f64) -> Vec<f64> {
        let q = self.quadratures(seed, index);
        let steps = (duration / dt).floor() as usize;
        (0..=steps)
            .map(|i| {
                let t = i as f64 * dt;
                self.omega
                    .iter()
                    .zip(&q)
                    .map(|(w, (a, b))| {
                        let (s, c) = (w * t).sin_cos();
                        a * c + b * s
                    })
                    .sum()
            })
            .collect()
    }

    /// `(∫y cos ω_k t, ∫y sin ω_k t)` for every bin.
    fn projections(&self, seq: &PulseSequence) -> Vec<(f64, f64)> {
        let segs: Vec<_> = seq.segments().collect();
        self.omega
            .iter()
            .map(|&w| {
                let (mut c, mut s) = (0.0, 0.0);
                for g in &segs {
                    let mid = 0.5 * (g.start + g.end);
                    let half = 0.5 * (g.end - g.start);
                    let k = 2.0 * (w * half).sin() / w;
                    let (sm, cm) = (w * mid).sin_cos();
                    c += g.sign * k * cm;
                    s += g.sign * k * sm;
                }
                (c, s)
            })
            .collect()
    }

    fn phase(&self, proj: &[(f64, f64)], seed: u64, index: u64) -> f64 {
        let mut rng = Self::rng(seed, index);
        let mut acc = 0.0;
        for (sd, (c, s)) in self.scale.iter().zip(proj) {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            acc += sd * (a * c + b * s);
        }
        acc
    }
}

/// Trajectory 0 of the configured ensemble.
pub fn sample_trajectory(spec: &NoiseSpectrum, cfg: &TrajectoryConfig, duration: f64) -> Result<Vec<f64>> {
    let syn = Synthesis::new(spec, cfg, duration)?;
    Ok(syn.path(cfg.seed, 0, cfg.dt, duration))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceEstimate {
    /// `⟨cos δφ⟩`
    pub coherence: f64,
    /// bootstrap standard error of `coherence`
    pub stderr: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub mean_phase: f64,
    pub mean_phase_stderr: f64,
    /// `⟨δφ²⟩`
    pub phase_second_moment: f64,
    pub bins: usize,
}

impl CoherenceEstimate {
    /// `|coherence - e^{-χ}|` in standard errors.
    pub fn deviation(&self, chi: f64) -> f64 {
        let d = (self.coherence - (-chi).exp()).abs();
        if self.stderr > 0.0 {
            d / self.stderr
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Ensemble estimate of the coherence `⟨cos δφ⟩`.
pub fn estimate_coherence(
    seq: &PulseSequence,
    spec: &NoiseSpectrum,
    cfg: &TrajectoryConfig,
) -> Result<CoherenceEstimate> {
    let syn = Synthesis::new(spec, cfg, seq.duration())?;
    let phases = random_phases(&syn, seq, cfg);
    let n = phases.len() as f64;
    let cosines: Vec<f64> = phases.iter().map(|p| p.cos()).collect();
    let coherence = cosines.iter().sum::<f64>() / n;
    let mean_phase = phases.iter().sum::<f64>() / n;
    let second = phases.iter().map(|p| p * p).sum::<f64>() / n;
    let var_phase = (second - mean_phase * mean_phase).max(0.0) * n / (n - 1.0);
    Ok(CoherenceEstimate {
        coherence,
        stderr: bootstrap_stderr(&cosines, cfg.seed),
        n_traj: cfg.n_traj,
        seed: cfg.seed,
        mean_phase,
        mean_phase_stderr: (var_phase / n).sqrt(),
        phase_second_moment: second,
        bins: syn.bins(),
    })
}

/// Random phases of every trajectory, in trajectory order.
pub fn random_phases(syn: &Synthesis, seq: &PulseSequence, cfg: &TrajectoryConfig) -> Vec<f64> {
    let proj = syn.projections(seq);
    (0..cfg.n_traj as u64)
        .into_par_iter()
        .map(|i| syn.phase(&proj, cfg.seed, i))
        .collect()
}

fn bootstrap_stderr(x: &[f64], seed: u64) -> f64 {
    let n = x.len();
    let mut rng = Synthesis::rng(seed, BOOTSTRAP_STREAM);
    let means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n).map(|_| x[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    let m = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (means.len() - 1) as f64;
    var.sqrt()
}
