// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

//! Sensitivity optimization over control parameters, plus brute-force grid
//! maps and sweeps used to cross-check it.

mod simplex;
mod space;

use rayon::prelude::*;

pub use simplex::{nelder_mead, NelderMeadOptions, OptimizationResult, RestartRecord};
pub use space::{IntervalSpace, SearchSpace, DEFAULT_MIN_SPACING};

use crate::control::{PulseSequence, SymmetricIntervals};
use crate::error::{invalid, Result};
use crate::field::FieldModel;
use crate::noise::Decoherence;
use crate::sensing::{accumulated_phase, report_from, SensitivityReport, SensorParams};

/// Sequences parametrized by their total length.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceFamily {
    Cp(usize),
    /// Windows rescaled to each total length.
    Template(SymmetricIntervals),
}

impl SequenceFamily {
    pub fn at(&self, duration: f64) -> Result<PulseSequence> {
        match self {
            Self::Cp(n) => PulseSequence::cp(*n, duration / *n as f64),
            Self::Template(tau) => PulseSequence::from_symmetric_intervals(&tau.rescaled(duration)?),
        }
    }

    pub fn pulses(&self) -> usize {
        match self {
            Self::Cp(n) => *n,
            Self::Template(t) => t.len(),
        }
    }
}

fn shifted(field: &FieldModel, alpha: f64) -> Result<FieldModel> {
    if alpha == 0.0 {
        Ok(field.clone())
    } else {
        field.with_phase_shift(alpha)
    }
}

/// Full report for one sequence under a phase-shifted field.
pub fn evaluate(
    seq: &PulseSequence,
    field: &FieldModel,
    noise: &impl Decoherence,
    alpha: f64,
    params: &SensorParams,
) -> Result<SensitivityReport> {
    let f = shifted(field, alpha)?;
    let phase = accumulated_phase(seq, &f, params)?;
    let chi = noise.chi(seq)?;
    Ok(report_from(seq.duration(), phase, chi))
}

/// Minimize η of CP-`n` over the sensing time and, when `phase` is given,
/// a joint phase shift of the field's tones.
pub fn optimize_time_phase(
    field: &FieldModel,
    noise: &impl Decoherence,
    n: usize,
    duration: (f64, f64),
    phase: Option<(f64, f64)>,
    params: &SensorParams,
    opts: &NelderMeadOptions,
) -> Result<OptimizationResult> {
    if n == 0 {
        return Err(invalid("CP needs at least one pulse"));
    }
    if phase.is_some() {
        // fails early for fields without tones
        field.with_phase_shift(0.0)?;
    }
    let space = SearchSpace::time_phase(duration, phase)?;
    let cost = |x: &[f64]| {
        let alpha = if x.len() > 1 { x[1] } else { 0.0 };
        let seq = PulseSequence::cp(n, x[0] / n as f64)?;
        Ok(evaluate(&seq, field, noise, alpha, params)?.eta)
    };
    nelder_mead(cost, None, &space, opts)
}

/// Minimize η over symmetric windows. Starts from `initial`, or from CP
/// when the total is fixed.
pub fn optimize_intervals(
    field: &FieldModel,
    noise: &impl Decoherence,
    space: &IntervalSpace,
    initial: Option<&SymmetricIntervals>,
    params: &SensorParams,
    opts: &NelderMeadOptions,
) -> Result<OptimizationResult> {
    if space.phase().is_some() {
        field.with_phase_shift(0.0)?;
    }
    let start = match (initial, space.total()) {
        (Some(tau), _) => tau.clone(),
        (None, Some(t)) => SymmetricIntervals::new(vec![t / space.n() as f64; space.n()])?,
        (None, None) => return Err(invalid("a free-T interval search needs an initial sequence")),
    };
    let alpha0 = space.phase().map_or(0.0, |(lo, hi)| 0.0f64.clamp(lo, hi));
    let x0 = space.encode(&start, alpha0)?;
    let search = SearchSpace::Intervals(space.clone());
    let cost = |x: &[f64]| {
        let seq = space.sequence(x)?;
        Ok(evaluate(&seq, field, noise, space.alpha(x), params)?.eta)
    };
    nelder_mead(cost, Some(&x0), &search, opts)
}

#[derive(Debug, Clone)]
pub struct IntervalGridResult {
    pub runs: Vec<(f64, OptimizationResult)>,
    /// index into `runs` of the lowest η
    pub best: usize,
}

impl IntervalGridResult {
    pub fn best_run(&self) -> (f64, &OptimizationResult) {
        let (t, r) = &self.runs[self.best];
        (*t, r)
    }
}

/// [`optimize_intervals`] at each fixed total in `totals`, each started
/// from CP.
pub fn optimize_intervals_grid(
    field: &FieldModel,
    noise: &impl Decoherence,
    space: &IntervalSpace,
    totals: &[f64],
    params: &SensorParams,
    opts: &NelderMeadOptions,
) -> Result<IntervalGridResult> {
    if totals.is_empty() {
        return Err(invalid("empty grid of total times"));
    }
    let mut runs = Vec::with_capacity(totals.len());
    for &t in totals {
        let s = space.clone().with_total(Some(t))?;
        runs.push((t, optimize_intervals(field, noise, &s, None, params, opts)?));
    }
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.value.total_cmp(&b.1 .1.value).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap();
    Ok(IntervalGridResult { runs, best })
}

/// Reports along `totals` for one sequence family.
pub fn sweep_t(
    field: &FieldModel,
    noise: &impl Decoherence,
    family: &SequenceFamily,
    totals: &[f64],
    params: &SensorParams,
) -> Result<Vec<SensitivityReport>> {
    sweep_shifted(field, noise, family, totals, 0.0, params)
}

fn sweep_shifted(
    field: &FieldModel,
    noise: &impl Decoherence,
    family: &SequenceFamily,
    totals: &[f64],
    alpha: f64,
    params: &SensorParams,
) -> Result<Vec<SensitivityReport>> {
    if totals.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("sweep times must be positive"));
    }
    if totals.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("sweep times must be increasing"));
    }
    let f = shifted(field, alpha)?;
    totals
        .par_iter()
        .map(|&t| {
            let seq = family.at(t)?;
            let phase = accumulated_phase(&seq, &f, params)?;
            let chi = noise.chi(&seq)?;
            Ok(report_from(t, phase, chi))
        })
        .collect()
}

/// `steps` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|k| {
                if k == steps - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (steps - 1) as f64
                }
            })
            .collect(),
    }
}

/// `1/η` over a `(T, α)` grid; row `i` belongs to `phases[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    pub durations: Vec<f64>,
    pub phases: Vec<f64>,
    pub inv_eta: Vec<Vec<f64>>,
}

impl GridMap {
    /// `(phase index, duration index, 1/η)` of the largest value.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (i, row) in self.inv_eta.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        best
    }

    /// Grid spacing `(ΔT, Δα)`.
    pub fn cell(&self) -> (f64, f64) {
        let step = |v: &[f64]| if v.len() > 1 { v[1] - v[0] } else { 0.0 };
        (step(&self.durations), step(&self.phases))
    }
}

/// Dense `1/η` map for CP-`n`. Each row is exactly the CP sweep of the
/// phase-shifted field.
pub fn grid_map(
    field: &FieldModel,
    noise: &impl Decoherence,
    n: usize,
    duration: (f64, f64),
    phase: (f64, f64),
    steps: (usize, usize),
    params: &SensorParams,
) -> Result<GridMap> {
    if steps.0 == 0 || steps.1 == 0 {
        return Err(invalid("map needs at least one step along each axis"));
    }
    if !(duration.0 > 0.0 && duration.1 >= duration.0) || !(phase.1 >= phase.0) {
        return Err(invalid("map ranges must be positive and ordered"));
    }
    let durations = linspace(duration.0, duration.1, steps.0);
    let phases = linspace(phase.0, phase.1, steps.1);
    let family = SequenceFamily::Cp(n);
    let rows: Result<Vec<Vec<f64>>> = phases
        .iter()
        .map(|&a| {
            let reports = sweep_shifted(field, noise, &family, &durations, a, params)?;
            Ok(reports.iter().map(|r| 1.0 / r.eta).collect())
        })
        .collect();
    Ok(GridMap {
        durations,
        phases,
        inv_eta: rows?,
    })
}
