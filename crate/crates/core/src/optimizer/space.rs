// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::TAU;

use super::simplex::NelderMeadOptions;
use crate::control::{PulseSequence, SymmetricIntervals};
use crate::error::{invalid, Error, Result};

/// Shortest allowed window around a pulse unless explicitly overridden.
pub const DEFAULT_MIN_SPACING: f64 = 6e-7;

/// Relative slack on interval bounds, absorbing the rounding of the fixed-T
/// rescale.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum SearchSpace {
    /// Plain box; bounds may be infinite.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `x = (T)` or `x = (T, α)`.
    TimePhase {
        duration: (f64, f64),
        phase: Option<(f64, f64)>,
    },
    /// `x = (τ_1..τ_n)` or `(τ_1..τ_n, α)`.
    Intervals(IntervalSpace),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSpace {
    n: usize,
    min_spacing: f64,
    max_spacing: f64,
    total: Option<f64>,
    phase: Option<(f64, f64)>,
}

impl IntervalSpace {
    /// `n` windows of at least [`DEFAULT_MIN_SPACING`], summing to `total`
    /// when given.
    pub fn new(n: usize, total: Option<f64>) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("interval optimization needs n >= 2, got {n}")));
        }
        if let Some(t) = total {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid(format!("total time must be positive, got {t}")));
            }
        }
        let space = Self {
            n,
            min_spacing: DEFAULT_MIN_SPACING,
            max_spacing: f64::INFINITY,
            total,
            phase: None,
        };
        space.check_feasible()?;
        Ok(space)
    }

    /// Raise the minimum spacing, or lower it below the default when
    /// `allow_below_default` is set.
    pub fn with_min_spacing(mut self, spacing: f64, allow_below_default: bool) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(invalid(format!("minimum spacing must be positive, got {spacing}")));
        }
        if spacing < DEFAULT_MIN_SPACING && !allow_below_default {
            return Err(invalid(format!(
                "minimum spacing {spacing} s is below the default {DEFAULT_MIN_SPACING} s"
            )));
        }
        self.min_spacing = spacing;
        self.check_feasible()?;
        Ok(self)
    }

    pub fn with_max_spacing(mut self, spacing: f64) -> Result<Self> {
        if !(spacing > self.min_spacing) {
            return Err(invalid("maximum spacing must exceed the minimum"));
        }
        self.max_spacing = spacing;
        self.check_feasible()?;
        Ok(self)
    }

    /// Also optimize a global field phase within `[lo, hi]`.
    pub fn with_phase(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
            return Err(invalid(format!("bad phase range [{lo}, {hi}]")));
        }
        self.phase = Some((lo, hi));
        Ok(self)
    }

    pub fn with_total(mut self, total: Option<f64>) -> Result<Self> {
        self.total = total;
        self.check_feasible()?;
        Ok(self)
    }

    fn check_feasible(&self) -> Result<()> {
        if let Some(t) = self.total {
            let need = self.n as f64 * self.min_spacing;
            if need > t * (1.0 + BOUND_SLACK) {
                return Err(Error::Infeasible(format!(
                    "{} windows of at least {} s need {need} s, more than T = {t} s",
                    self.n, self.min_spacing
                )));
            }
            if self.n as f64 * self.max_spacing < t {
                return Err(Error::Infeasible(format!(
                    "{} windows of at most {} s cannot fill T = {t} s",
                    self.n, self.max_spacing
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn min_spacing(&self) -> f64 {
        self.min_spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.max_spacing
    }

    pub fn total(&self) -> Option<f64> {
        self.total
    }

    pub fn phase(&self) -> Option<(f64, f64)> {
        self.phase
    }

    pub fn dim(&self) -> usize {
        self.n + usize::from(self.phase.is_some())
    }

    /// Parameter vector for `tau` (and phase `alpha` when optimized).
    pub fn encode(&self, tau: &SymmetricIntervals, alpha: f64) -> Result<Vec<f64>> {
        if tau.len() != self.n {
            return Err(invalid(format!("expected {} intervals, got {}", self.n, tau.len())));
        }
        let mut x = tau.as_slice().to_vec();
        if self.phase.is_some() {
            x.push(alpha);
        }
        Ok(x)
    }

    pub fn intervals(&self, x: &[f64]) -> Result<SymmetricIntervals> {
        SymmetricIntervals::new(x[..self.n].to_vec())
    }

    pub fn sequence(&self, x: &[f64]) -> Result<PulseSequence> {
        PulseSequence::from_symmetric_intervals(&self.intervals(x)?)
    }

    /// Field phase encoded in `x`, 0 when not optimized.
    pub fn alpha(&self, x: &[f64]) -> f64 {
        if self.phase.is_some() {
            x[self.n]
        } else {
            0.0
        }
    }
}

impl SearchSpace {
    pub fn unbounded(dim: usize) -> Self {
        Self::Box {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn bounded(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(invalid("box bounds must pair up with lower <= upper"));
        }
        Ok(Self::Box { lower, upper })
    }

    pub fn time_phase(duration: (f64, f64), phase: Option<(f64, f64)>) -> Result<Self> {
        if !(duration.0 > 0.0 && duration.0 <= duration.1 && duration.1.is_finite()) {
            return Err(invalid(format!("bad duration range {duration:?}")));
        }
        if let Some(p) = phase {
            if !(p.0 <= p.1 && p.0.is_finite() && p.1.is_finite()) {
                return Err(invalid(format!("bad phase range {p:?}")));
            }
        }
        Ok(Self::TimePhase { duration, phase })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Box { lower, .. } => lower.len(),
            Self::TimePhase { phase, .. } => 1 + usize::from(phase.is_some()),
            Self::Intervals(s) => s.dim(),
        }
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Self::Box { lower, upper } => (lower.clone(), upper.clone()),
            Self::TimePhase { duration, phase } => {
                let mut lo = vec![duration.0];
                let mut hi = vec![duration.1];
                if let Some(p) = phase {
                    lo.push(p.0);
                    hi.push(p.1);
                }
                (lo, hi)
            }
            Self::Intervals(s) => {
                let mut lo = vec![s.min_spacing * (1.0 - BOUND_SLACK); s.n];
                let mut hi = vec![s.max_spacing * (1.0 + BOUND_SLACK); s.n];
                if let Some(p) = s.phase {
                    lo.push(p.0);
                    hi.push(p.1);
                }
                (lo, hi)
            }
        }
    }

    /// Characteristic size of each coordinate, used to normalize penalties
    /// and size the initial simplex.
    fn scales(&self, x: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        let phase_index = match self {
            Self::Box { .. } => None,
            Self::TimePhase { phase, .. } => phase.map(|_| 1),
            Self::Intervals(s) => s.phase.map(|_| s.n),
        };
        (0..lo.len())
            .map(|j| {
                let span = hi[j] - lo[j];
                if Some(j) == phase_index {
                    if span > 0.0 {
                        span
                    } else {
                        TAU
                    }
                } else if matches!(self, Self::Intervals(_)) {
                    x[j].abs().max(lo[j])
                } else if span.is_finite() && span > 0.0 {
                    span
                } else {
                    x[j].abs().max(1.0)
                }
            })
            .collect()
    }

    pub(crate) fn tolerances(&self, opts: &NelderMeadOptions) -> Vec<f64> {
        let d = self.dim();
        let mut tol = vec![opts.xtol; d];
        match self {
            Self::TimePhase { phase: Some(_), .. } => tol[1] = opts.phase_xtol,
            Self::Intervals(s) if s.phase.is_some() => tol[s.n] = opts.phase_xtol,
            _ => {}
        }
        tol
    }

    pub(crate) fn initial_steps(&self, x0: &[f64], frac: f64) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        self.scales(x0)
            .into_iter()
            .enumerate()
            .map(|(j, s)| if lo[j] == hi[j] { 0.0 } else { frac * s })
            .collect()
    }

    /// Sum of squared, scale-normalized bound violations; 0 when feasible.
    pub fn violation(&self, x: &[f64]) -> f64 {
        if x.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        let (lo, hi) = self.bounds();
        let scale = self.scales(x);
        let mut v = 0.0;
        for j in 0..x.len() {
            let over = (lo[j] - x[j]).max(0.0) + (x[j] - hi[j]).max(0.0);
            if over > 0.0 {
                let r = over / scale[j];
                // tiny violations must still register
                v += (r * r).max(f64::MIN_POSITIVE);
            }
        }
        v
    }

    /// Number of constraints `x` breaks, counting the fixed total.
    pub fn violated_constraints(&self, x: &[f64]) -> usize {
        let (lo, hi) = self.bounds();
        let mut count = (0..x.len()).filter(|&j| !(x[j] >= lo[j] && x[j] <= hi[j])).count();
        if let Self::Intervals(s) = self {
            if let Some(t) = s.total {
                let sum: f64 = x[..s.n].iter().sum();
                if (sum - t).abs() > 1e-12 * t {
                    count += 1;
                }
            }
        }
        count
    }

    /// Restore equality constraints after a simplex move.
    pub fn repair(&self, x: &mut [f64]) {
        if let Self::Intervals(IntervalSpace { n, total: Some(t), .. }) = self {
            let sum: f64 = x[..*n].iter().sum();
            if sum > 0.0 && sum.is_finite() {
                let k = t / sum;
                x[..*n].iter_mut().for_each(|v| *v *= k);
            }
        }
    }

    /// Nearest-in-spirit feasible point: clip to the bounds and, for a fixed
    /// total, redistribute the remaining time over unclipped windows.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(invalid(format!(
                "point has {} coordinates, space has {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("point has non-finite coordinates"));
        }
        let (lo, hi) = self.bounds();
        let mut y: Vec<f64> = x
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect();
        if let Self::Intervals(s) = self {
            s.check_feasible()?;
            let (a, b) = (s.min_spacing, s.max_spacing);
            y[..s.n].iter_mut().for_each(|v| *v = v.clamp(a, b));
            if let Some(t) = s.total {
                for _ in 0..200 {
                    let sum: f64 = y[..s.n].iter().sum();
                    if (sum - t).abs() <= 1e-14 * t {
                        break;
                    }
                    let grow = sum < t;
                    let free: f64 = y[..s.n].iter().filter(|&&v| if grow { v < b } else { v > a }).sum();
                    if free <= 0.0 {
                        break;
                    }
                    let k = 1.0 + (t - sum) / free;
                    for v in y[..s.n].iter_mut() {
                        if (grow && *v < b) || (!grow && *v > a) {
                            *v = (*v * k).clamp(a, b);
                        }
                    }
                }
                self.repair(&mut y);
            }
        }
        if self.violated_constraints(&y) > 0 {
            return Err(Error::Infeasible(
                "could not project the start onto the constraints".into(),
            ));
        }
        Ok(y)
    }

    /// Box from which latin-hypercube starts are drawn.
    pub(crate) fn sampling_box(&self, x0: Option<&[f64]>, spread: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let (lo, hi) = self.bounds();
        let d = lo.len();
        let center: Vec<f64> = match (x0, self) {
            (Some(x), _) => x.to_vec(),
            (None, Self::Intervals(s)) => {
                let tau = match s.total {
                    Some(t) => t / s.n as f64,
                    None if s.max_spacing.is_finite() => 0.5 * (s.min_spacing + s.max_spacing),
                    None => {
                        return Err(invalid(
                            "interval search without a start needs a fixed total or a maximum spacing",
                        ))
                    }
                };
                let mut c = vec![tau; s.n];
                if let Some(p) = s.phase {
                    c.push(0.5 * (p.0 + p.1));
                }
                c
            }
            (None, _) => (0..d)
                .map(|j| match (lo[j].is_finite(), hi[j].is_finite()) {
                    (true, true) => 0.5 * (lo[j] + hi[j]),
                    (true, false) => lo[j],
                    (false, true) => hi[j],
                    (false, false) => 0.0,
                })
                .collect(),
        };
        let scale = self.scales(&center);
        let mut a = Vec::with_capacity(d);
        let mut b = Vec::with_capacity(d);
        for j in 0..d {
            let local = matches!(self, Self::Intervals(s) if j < s.n);
            if !local && lo[j].is_finite() && hi[j].is_finite() {
                a.push(lo[j]);
                b.push(hi[j]);
            } else {
                let w = if local {
                    spread * center[j]
                } else {
                    spread * scale[j] * 4.0
                };
                a.push((center[j] - w).max(lo[j]));
                b.push((center[j] + w).min(hi[j]));
            }
        }
        Ok((a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_total_projection() {
        let s = SearchSpace::Intervals(IntervalSpace::new(4, Some(10e-6)).unwrap());
        let y = s.project(&[1e-7, 5e-6, 5e-6, 5e-6]).unwrap();
        assert!(y.iter().all(|&v| v >= DEFAULT_MIN_SPACING * (1.0 - 1e-12)));
        let sum: f64 = y.iter().sum();
        assert!((sum - 10e-6).abs() <= 1e-12 * 10e-6);
        assert_eq!(s.violated_constraints(&y), 0);
    }

    #[test]
    fn too_short_total_is_infeasible() {
        assert!(matches!(IntervalSpace::new(50, Some(20e-6)), Err(Error::Infeasible(_))));
        let s = IntervalSpace::new(50, Some(20e-6 + 50.0 * 6e-7));
        assert!(s.is_ok());
    }

    #[test]
    fn spacing_below_default_needs_flag() {
        let s = IntervalSpace::new(4, None).unwrap();
        assert!(s.clone().with_min_spacing(1e-7, false).is_err());
        assert_eq!(s.with_min_spacing(1e-7, true).unwrap().min_spacing(), 1e-7);
    }

    #[test]
    fn repair_restores_total() {
        let s = SearchSpace::Intervals(IntervalSpace::new(3, Some(9e-6)).unwrap());
        let mut x = vec![2e-6, 4e-6, 6e-6];
        s.repair(&mut x);
        assert!((x.iter().sum::<f64>() - 9e-6).abs() < 1e-20);
        assert!((x[1] / x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn box_violation_is_zero_inside() {
        let s = SearchSpace::bounded(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(s.violation(&[0.5, 0.0]), 0.0);
        assert!(s.violation(&[1.5, 0.0]) > 0.0);
        assert!(s.violation(&[1.0 + 1e-15, 0.0]) > 0.0);
    }
}
