// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

// Coarse brute-force 1/η map over (T, α), compared with the optimizer.

use std::f64::consts::{PI, TAU};

use qsense::field::FieldModel;
use qsense::noise::{ChiEngine, NoiseSpectrum};
use qsense::optimizer::{grid_map, optimize_time_phase, NelderMeadOptions};
use qsense::sensing::SensorParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let field = FieldModel::monochromatic(20.5e3, 0.0)?;
    let line = NoiseSpectrum::single_line(2e4, TAU * 22e3, TAU * 2e3)?;
    let noise = ChiEngine::new(&line, 300e-6);
    let params = SensorParams::default();
    let map = grid_map(&field, &noise, 8, (100e-6, 300e-6), (0.0, PI), (41, 19), &params)?;
    let (i, j, v) = map.argmax();
    let (dt, da) = map.cell();
    println!(
        "map argmax: T = {:.0} µs, alpha = {:.0} deg, 1/eta = {v:.1} (cells {:.0} µs x {:.0} deg)",
        map.durations[j] * 1e6,
        map.phases[i].to_degrees(),
        dt * 1e6,
        da.to_degrees()
    );
    let res = optimize_time_phase(
        &field,
        &noise,
        8,
        (100e-6, 300e-6),
        Some((0.0, PI)),
        &params,
        &NelderMeadOptions::default(),
    )?;
    println!(
        "optimizer:  T = {:.1} µs, alpha = {:.1} deg, 1/eta = {:.1}",
        res.best[0] * 1e6,
        res.best[1].to_degrees(),
        1.0 / res.value
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
