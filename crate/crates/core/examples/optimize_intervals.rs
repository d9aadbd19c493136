// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

// Free pulse positions (symmetric windows) at fixed T, starting from CP.

use std::f64::consts::TAU;

use qsense::control::PulseSequence;
use qsense::field::FieldModel;
use qsense::noise::{ChiEngine, NoiseSpectrum};
use qsense::optimizer::{evaluate, optimize_intervals, IntervalSpace, NelderMeadOptions};
use qsense::sensing::SensorParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let field = FieldModel::multitone_shared_phase(&[0.45, 0.43, 0.12], &[77e3, 96e3, 141e3], 0.0)?;
    let line = NoiseSpectrum::single_line(1e4, TAU * 80e3, TAU * 5e3)?;
    let total = 60e-6;
    let n = 12;
    let noise = ChiEngine::new(&line, total);
    let params = SensorParams::default();
    let space = IntervalSpace::new(n, Some(total))?;
    let opts = NelderMeadOptions {
        restarts: 1,
        max_evals: 4000,
        ..NelderMeadOptions::default()
    };
    let res = optimize_intervals(&field, &noise, &space, None, &params, &opts)?;
    let cp = evaluate(&PulseSequence::cp(n, total / n as f64)?, &field, &noise, 0.0, &params)?;
    let seq = space.sequence(&res.best)?;
    println!("CP-{n} at T = {:.0} µs: eta = {:.4e}", total * 1e6, cp.eta);
    println!(
        "optimized windows:  eta = {:.4e} after {} evaluations",
        res.value, res.evaluations
    );
    println!(
        "pulses (µs): {:?}",
        seq.pulses()
            .iter()
            .map(|t| (t * 1e8).round() / 100.0)
            .collect::<Vec<_>>()
    );
    if res.value > cp.eta {
        return Err("the search lost to its own starting point".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
