// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

// Joint search over sensing time and field phase for CP-8 under noise.

use std::f64::consts::TAU;

use qsense::control::PulseSequence;
use qsense::field::FieldModel;
use qsense::noise::{ChiEngine, NoiseSpectrum};
use qsense::optimizer::{evaluate, optimize_time_phase, NelderMeadOptions};
use qsense::sensing::SensorParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let field = FieldModel::monochromatic(20.5e3, 0.0)?;
    let line = NoiseSpectrum::single_line(2e4, TAU * 22e3, TAU * 2e3)?;
    let noise = ChiEngine::new(&line, 300e-6);
    let params = SensorParams::default();
    let opts = NelderMeadOptions {
        restarts: 4,
        ..NelderMeadOptions::default()
    };
    let res = optimize_time_phase(&field, &noise, 8, (100e-6, 300e-6), Some((0.0, TAU)), &params, &opts)?;
    let naive_t = 8.0 / (2.0 * 20.5e3);
    let naive = evaluate(&PulseSequence::cp(8, naive_t / 8.0)?, &field, &noise, 0.0, &params)?;
    println!(
        "T* = {:.2} µs, alpha* = {:.1} deg, eta = {:.4e} ({} evaluations)",
        res.best[0] * 1e6,
        res.best[1].to_degrees(),
        res.value,
        res.evaluations
    );
    println!(
        "at T = n/(2nu), alpha = 0: eta = {:.4e}, ratio {:.3}",
        naive.eta,
        naive.eta / res.value
    );
    for (k, r) in res.restarts.iter().enumerate() {
        println!(
            "  restart {k}: eta = {:.4e}, {} evals, converged = {}",
            r.value, r.evaluations, r.converged
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
