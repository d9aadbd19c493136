// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

//! Nelder-Mead with penalty constraints and latin-hypercube restarts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::space::SearchSpace;
use crate::error::{Error, Result};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Penalty floor so an infeasible point never ties the feasible best.
const PENALTY_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    /// Simplex-diameter tolerance on time coordinates, s.
    pub xtol: f64,
    /// Simplex-diameter tolerance on phase coordinates, rad.
    pub phase_xtol: f64,
    /// Relative spread of cost values across the simplex.
    pub ftol: f64,
    /// Evaluation budget per restart, penalized trial points included.
    pub max_evals: usize,
    /// Number of independent starts.
    pub restarts: usize,
    /// Rebuilds of the simplex around a converged point.
    pub reinit: usize,
    /// Initial simplex edge as a fraction of each coordinate's scale.
    pub initial_step: f64,
    /// Half-width, relative to the start, of the box seeded around a
    /// supplied start when the bounds are open or very wide.
    pub restart_spread: f64,
    pub seed: u64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            xtol: 1e-9,
            phase_xtol: 1e-7,
            ftol: 1e-6,
            max_evals: 20_000,
            restarts: 8,
            reinit: 2,
            initial_step: 0.05,
            restart_spread: 0.25,
            seed: 0,
        }
    }
}

impl NelderMeadOptions {
    pub fn single_start() -> Self {
        Self {
            restarts: 1,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartRecord {
    pub start: Vec<f64>,
    pub best: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// infeasible trial points that were penalized instead of evaluated
    pub penalized: usize,
    pub converged: bool,
    /// best value after each iteration
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub restarts: Vec<RestartRecord>,
    pub converged: bool,
    /// constraints violated by `best`; always 0 for a returned result
    pub violations: usize,
}

impl OptimizationResult {
    pub fn winner(&self) -> &RestartRecord {
        self.restarts
            .iter()
            .find(|r| r.best == self.best && r.value == self.value)
            .unwrap_or(&self.restarts[0])
    }
}

/// Minimize `cost` over `space` from `x0` (projected if infeasible) plus
/// `opts.restarts - 1` latin-hypercube starts. Restarts run in parallel;
/// the result is identical for a given seed regardless of thread count.
pub fn nelder_mead<F>(
    cost: F,
    x0: Option<&[f64]>,
    space: &SearchSpace,
    opts: &NelderMeadOptions,
) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let d = space.dim();
    if d == 0 {
        return Err(Error::InvalidArgument("search space has no free parameters".into()));
    }
    if opts.restarts == 0 || opts.max_evals <= d + 1 {
        return Err(Error::InvalidArgument(
            "need at least one restart and more evaluations than simplex vertices".into(),
        ));
    }
    if let Some(x) = x0 {
        if x.len() != d {
            return Err(Error::InvalidArgument(format!(
                "start has {} coordinates, space has {d}",
                x.len()
            )));
        }
    }
    let starts = start_points(x0, space, opts)?;
    let tol = space.tolerances(opts);
    let runs: Vec<Result<RestartRecord>> = starts
        .into_par_iter()
        .map(|s| run_with_reinit(&cost, s, space, &tol, opts))
        .collect();
    let mut records = Vec::with_capacity(runs.len());
    for r in runs {
        records.push(r?);
    }
    let winner = records
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.value.is_nan())
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Infeasible("no restart produced a feasible point".into()))?;
    let best = records[winner].best.clone();
    let violations = space.violated_constraints(&best);
    if violations > 0 {
        return Err(Error::Infeasible(format!(
            "best point violates {violations} constraints"
        )));
    }
    Ok(OptimizationResult {
        value: records[winner].value,
        converged: records[winner].converged,
        evaluations: records.iter().map(|r| r.evaluations).sum(),
        best,
        restarts: records,
        violations,
    })
}

fn start_points(x0: Option<&[f64]>, space: &SearchSpace, opts: &NelderMeadOptions) -> Result<Vec<Vec<f64>>> {
    let mut starts = Vec::with_capacity(opts.restarts);
    if let Some(x) = x0 {
        starts.push(space.project(x)?);
    }
    let extra = opts.restarts - starts.len();
    if extra == 0 {
        return Ok(starts);
    }
    let (lo, hi) = space.sampling_box(x0, opts.restart_spread)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let d = lo.len();
    let mut cols: Vec<Vec<usize>> = Vec::with_capacity(d);
    for _ in 0..d {
        let mut p: Vec<usize> = (0..extra).collect();
        p.shuffle(&mut rng);
        cols.push(p);
    }
    for k in 0..extra {
        let x: Vec<f64> = (0..d)
            .map(|j| {
                let u: f64 = rng.gen();
                lo[j] + (hi[j] - lo[j]) * (cols[j][k] as f64 + u) / extra as f64
            })
            .collect();
        starts.push(space.project(&x)?);
    }
    Ok(starts)
}

struct Evaluator<'a, F> {
    cost: &'a F,
    space: &'a SearchSpace,
    best_x: Vec<f64>,
    best_f: f64,
    evals: usize,
    penalized: usize,
}

impl<F: Fn(&[f64]) -> Result<f64>> Evaluator<'_, F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        let v = self.space.violation(x);
        if v > 0.0 {
            self.penalized += 1;
            let base = if self.best_f.is_finite() {
                self.best_f
            } else {
                f64::MAX / 4.0
            };
            return Ok(base + (1.0 + base.abs()) * (PENALTY_FLOOR + v));
        }
        self.evals += 1;
        let f = (self.cost)(x)?;
        let f = if f.is_nan() { f64::INFINITY } else { f };
        if self.best_f.is_nan() || f < self.best_f {
            self.best_f = f;
            self.best_x = x.to_vec();
        }
        Ok(f)
    }
}

fn run_with_reinit<F>(
    cost: &F,
    start: Vec<f64>,
    space: &SearchSpace,
    tol: &[f64],
    opts: &NelderMeadOptions,
) -> Result<RestartRecord>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut ev = Evaluator {
        cost,
        space,
        best_x: start.clone(),
        best_f: f64::NAN,
        evals: 0,
        penalized: 0,
    };
    let mut trace = Vec::new();
    let mut converged = run_once(&mut ev, &start, tol, opts, &mut trace)?;
    for _ in 0..opts.reinit {
        if ev.evals + ev.penalized >= opts.max_evals || !ev.best_f.is_finite() {
            break;
        }
        let before = ev.best_f;
        let from = ev.best_x.clone();
        converged = run_once(&mut ev, &from, tol, opts, &mut trace)?;
        if before - ev.best_f <= opts.ftol * before.abs() {
            break;
        }
    }
    if ev.best_f.is_nan() {
        return Err(Error::Infeasible("no feasible point was evaluated".into()));
    }
    Ok(RestartRecord {
        start,
        best: ev.best_x,
        value: ev.best_f,
        evaluations: ev.evals,
        penalized: ev.penalized,
        converged,
        trace,
    })
}

/// One simplex descent; returns whether the tolerances were met.
fn run_once<F>(
    ev: &mut Evaluator<'_, F>,
    x0: &[f64],
    tol: &[f64],
    opts: &NelderMeadOptions,
    trace: &mut Vec<f64>,
) -> Result<bool>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let d = x0.len();
    let steps = ev.space.initial_steps(x0, opts.initial_step);
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    pts.push(x0.to_vec());
    for j in 0..d {
        let mut x = x0.to_vec();
        x[j] += steps[j];
        if ev.space.violation(&x) > 0.0 {
            x[j] = x0[j] - steps[j];
        }
        ev.space.repair(&mut x);
        pts.push(x);
    }
    let mut vals = Vec::with_capacity(d + 1);
    for p in &pts {
        vals.push(ev.eval(p)?);
    }
    let mut order: Vec<usize> = (0..=d).collect();
    loop {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        trace.push(ev.best_f);
        let (ib, iw, is) = (order[0], order[d], order[d - usize::from(d > 0)]);
        if converged(&pts, &vals, ib, tol, opts.ftol) {
            return Ok(true);
        }
        if ev.evals + ev.penalized >= opts.max_evals {
            return Ok(false);
        }
        let mut c = vec![0.0; d];
        for &i in &order[..d] {
            for j in 0..d {
                c[j] += pts[i][j];
            }
        }
        c.iter_mut().for_each(|v| *v /= d as f64);
        let along = |t: f64, ev: &Evaluator<'_, F>| -> Vec<f64> {
            let mut x: Vec<f64> = (0..d).map(|j| c[j] + t * (pts[iw][j] - c[j])).collect();
            ev.space.repair(&mut x);
            x
        };
        let xr = along(-REFLECT, ev);
        let fr = ev.eval(&xr)?;
        if fr < vals[ib] {
            let xe = along(-REFLECT * EXPAND, ev);
            let fe = ev.eval(&xe)?;
            if fe < fr {
                pts[iw] = xe;
                vals[iw] = fe;
            } else {
                pts[iw] = xr;
                vals[iw] = fr;
            }
            continue;
        }
        if fr < vals[is] {
            pts[iw] = xr;
            vals[iw] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < vals[iw] {
            let xc = along(-REFLECT * CONTRACT, ev);
            let fc = ev.eval(&xc)?;
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = along(CONTRACT, ev);
            let fc = ev.eval(&xc)?;
            let ok = fc < vals[iw];
            (xc, fc, ok)
        };
        if accept {
            pts[iw] = xc;
            vals[iw] = fc;
            continue;
        }
        let anchor = pts[ib].clone();
        for i in 0..=d {
            if i == ib {
                continue;
            }
            let mut x: Vec<f64> = (0..d).map(|j| anchor[j] + SHRINK * (pts[i][j] - anchor[j])).collect();
            ev.space.repair(&mut x);
            vals[i] = ev.eval(&x)?;
            pts[i] = x;
        }
    }
}

fn converged(pts: &[Vec<f64>], vals: &[f64], ib: usize, tol: &[f64], ftol: f64) -> bool {
    let small = pts
        .iter()
        .all(|p| p.iter().zip(&pts[ib]).zip(tol).all(|((a, b), t)| (a - b).abs() <= *t));
    if !small {
        return false;
    }
    let lo = vals[ib];
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return lo == hi;
    }
    hi - lo <= ftol * lo.abs() + f64::MIN_POSITIVE
}
