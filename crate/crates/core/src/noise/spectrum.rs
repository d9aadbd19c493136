// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Gaussian lines extend this many widths on either side of their center.
pub(crate) const LINE_REACH_SIGMAS: f64 = 10.0;

/// One gaussian line `A exp(-(ω - ω₀)² / 2σ²)`, rates in s⁻¹ and angular
/// frequencies in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLine {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl GaussianLine {
    fn profile(&self, omega: f64) -> f64 {
        let d = (omega - self.center) / self.width;
        (-0.5 * d * d).exp()
    }
}

/// Power spectral density `S(ω)` of the dephasing phase rate, in s⁻¹.
///
/// `S` is even in `ω`. A gaussian mixture is symmetrized as
/// `Σ A_k [g(ω - ω_k) + g(ω + ω_k)]`, which is smooth through `ω = 0`; for
/// lines with `ω_k ≫ σ_k` the mirror term is negligible on `ω ≥ 0` and `A_k`
/// is the peak height. The coupling `γ²` is absorbed into `S`.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpectrum {
    GaussianMixture(Vec<GaussianLine>),
    /// Linear interpolation on a strictly increasing grid `ω ≥ 0`, zero
    /// outside it.
    Tabulated {
        omega: Vec<f64>,
        values: Vec<f64>,
    },
}

impl NoiseSpectrum {
    pub fn zero() -> Self {
        NoiseSpectrum::GaussianMixture(Vec::new())
    }

    pub fn gaussian_mixture(lines: Vec<GaussianLine>) -> Result<Self> {
        for (k, l) in lines.iter().enumerate() {
            if !(l.amplitude >= 0.0 && l.amplitude.is_finite()) {
                return Err(invalid(format!("line {k}: amplitude must be nonnegative")));
            }
            if !(l.width > 0.0 && l.width.is_finite()) {
                return Err(invalid(format!("line {k}: width must be positive")));
            }
            if !l.center.is_finite() {
                return Err(invalid(format!("line {k}: center must be finite")));
            }
        }
        Ok(NoiseSpectrum::GaussianMixture(lines))
    }

    pub fn single_line(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        Self::gaussian_mixture(vec![GaussianLine {
            amplitude,
            center,
            width,
        }])
    }

    pub fn tabulated(omega: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if omega.len() != values.len() || omega.len() < 2 {
            return Err(invalid(
                "tabulated spectrum needs matching omega/S columns of length >= 2",
            ));
        }
        if omega[0] < 0.0 {
            return Err(invalid("tabulated spectrum grid must start at omega >= 0"));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("tabulated spectrum grid must be strictly increasing"));
        }
        if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(invalid("spectral density must be finite and nonnegative"));
        }
        Ok(NoiseSpectrum::Tabulated { omega, values })
    }

    pub fn lines(&self) -> Option<&[GaussianLine]> {
        match self {
            NoiseSpectrum::GaussianMixture(l) => Some(l),
            NoiseSpectrum::Tabulated { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            NoiseSpectrum::GaussianMixture(l) => l.iter().all(|l| l.amplitude == 0.0),
            NoiseSpectrum::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// `c · S`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        match self {
            NoiseSpectrum::GaussianMixture(l) => Self::gaussian_mixture(
                l.iter()
                    .map(|l| GaussianLine {
                        amplitude: l.amplitude * c,
                        ..*l
                    })
                    .collect(),
            ),
            NoiseSpectrum::Tabulated { omega, values } => {
                Self::tabulated(omega.clone(), values.iter().map(|v| v * c).collect())
            }
        }
    }

    /// `S(ω)`; even in `ω`.
    pub fn eval(&self, omega: f64) -> f64 {
        let w = omega.abs();
        match self {
            NoiseSpectrum::GaussianMixture(lines) => lines
                .iter()
                .map(|l| {
                    let mirror = GaussianLine {
                        center: -l.center,
                        ..*l
                    };
                    l.amplitude * (l.profile(w) + mirror.profile(w))
                })
                .sum(),
            NoiseSpectrum::Tabulated { omega: grid, values } => {
                let last = grid.len() - 1;
                if w < grid[0] || w > grid[last] {
                    return 0.0;
                }
                let k = grid.partition_point(|&g| g <= w).clamp(1, last);
                let (a, b) = (grid[k - 1], grid[k]);
                let x = (w - a) / (b - a);
                values[k - 1] + x * (values[k] - values[k - 1])
            }
        }
    }

    /// Disjoint intervals on `ω ≥ 0` outside which `S` is negligible.
    pub fn support(&self) -> Vec<(f64, f64)> {
        let mut raw: Vec<(f64, f64)> = match self {
            NoiseSpectrum::GaussianMixture(lines) => lines
                .iter()
                .filter(|l| l.amplitude > 0.0)
                .filter_map(|l| {
                    let c = l.center.abs();
                    let hi = c + LINE_REACH_SIGMAS * l.width;
                    let lo = (c - LINE_REACH_SIGMAS * l.width).max(0.0);
                    (hi > 0.0).then_some((lo, hi))
                })
                .collect(),
            NoiseSpectrum::Tabulated { omega, .. } => vec![(omega[0], omega[omega.len() - 1])],
        };
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in raw {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        merged
    }

    /// Upper edge of the support.
    pub fn max_frequency(&self) -> f64 {
        self.support().last().map_or(0.0, |s| s.1)
    }

    /// Points inside the support where `S` changes character: line centers
    /// and widths, or grid nodes.
    pub fn feature_frequencies(&self) -> Vec<f64> {
        let mut out = Vec::new();
        match self {
            NoiseSpectrum::GaussianMixture(lines) => {
                for l in lines.iter().filter(|l| l.amplitude > 0.0) {
                    let c = l.center.abs();
                    for k in -10..=10 {
                        let x = c + l.width * k as f64;
                        if x > 0.0 {
                            out.push(x);
                        }
                    }
                }
            }
            NoiseSpectrum::Tabulated { omega, .. } => out.extend_from_slice(omega),
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// Narrowest spectral feature, used to size quadrature panels.
    pub fn finest_scale(&self) -> f64 {
        match self {
            NoiseSpectrum::GaussianMixture(lines) => lines
                .iter()
                .filter(|l| l.amplitude > 0.0)
                .map(|l| l.width)
                .fold(f64::INFINITY, f64::min),
            NoiseSpectrum::Tabulated { omega, .. } => {
                omega.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Autocovariance of the phase rate,
    /// `C(u) = (1/π) ∫₀^∞ S(ω) cos(ωu) dω`.
    pub fn autocovariance(&self, u: f64) -> f64 {
        match self {
            NoiseSpectrum::GaussianMixture(lines) => {
                let k = (2.0 / PI).sqrt();
                lines
                    .iter()
                    .map(|l| {
                        let e = l.width * u;
                        l.amplitude * l.width * k * (-0.5 * e * e).exp() * (l.center * u).cos()
                    })
                    .sum()
            }
            NoiseSpectrum::Tabulated { omega, values } => {
                omega
                    .windows(2)
                    .zip(values.windows(2))
                    .map(|(w, v)| linear_cos_integral(w[0], w[1], v[0], v[1], u))
                    .sum::<f64>()
                    / PI
            }
        }
    }

    /// Variance of the phase rate, `C(0)`.
    pub fn variance(&self) -> f64 {
        self.autocovariance(0.0)
    }
}

/// `∫_a^b s(ω) cos(ωu) dω` for `s` linear from `sa` to `sb`.
fn linear_cos_integral(a: f64, b: f64, sa: f64, sb: f64, u: f64) -> f64 {
    let h = b - a;
    let q = (sb - sa) / h;
    if (u * b).abs() < 1e-3 {
        // cos(ωu) ≈ 1 - (ωu)²/2 + (ωu)⁴/24, integrated against the line
        let m = |p: i32| -> f64 {
            let pf = p as f64;
            // ∫ (sa + q(ω - a)) ω^p dω
            let base = sa - q * a;
            base * (b.powi(p + 1) - a.powi(p + 1)) / (pf + 1.0) + q * (b.powi(p + 2) - a.powi(p + 2)) / (pf + 2.0)
        };
        let u2 = u * u;
        return m(0) - 0.5 * u2 * m(2) + u2 * u2 / 24.0 * m(4);
    }
    // cos(bu) - cos(au) in product form
    let dcos = -2.0 * (0.5 * (b + a) * u).sin() * (0.5 * h * u).sin();
    (sb * (b * u).sin() - sa * (a * u).sin()) / u + q * dcos / (u * u)
}
