// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

// Calibrate the scale between a measured slope observable and 1/η, then
// predict the observable on the theory grid.

use std::f64::consts::TAU;

use qsense::field::FieldModel;
use qsense::noise::NoiseSpectrum;
use qsense::optimizer::{linspace, sweep_t, SequenceFamily};
use qsense::sensing::{calibrate_c, SensorParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let field = FieldModel::monochromatic(20.5e3, 0.0)?;
    let line = NoiseSpectrum::single_line(2e3, TAU * 22e3, TAU * 2e3)?;
    let params = SensorParams::default();
    let theory: Vec<(f64, f64)> = sweep_t(
        &field,
        &line,
        &SequenceFamily::Cp(8),
        &linspace(120e-6, 280e-6, 33),
        &params,
    )?
    .iter()
    .map(|r| (r.duration, r.eta))
    .collect();
    // a fake measurement: 0.05/η with a small deterministic wobble
    let measured: Vec<(f64, f64)> = theory
        .iter()
        .step_by(2)
        .enumerate()
        .map(|(k, &(t, eta))| (t, 0.05 / eta * (1.0 + 0.01 * (k as f64 * 1.7).sin())))
        .collect();
    let cal = calibrate_c(&measured, &theory)?;
    println!(
        "C = {:.4} ± {:.4} (true 0.05), peak at T = {:.1} µs",
        cal.c,
        cal.c_err,
        cal.t_peak * 1e6
    );
    let (e, de) = cal.predict(theory[16].1);
    println!("predicted E at T = {:.0} µs: {e:.2} ± {de:.2}", theory[16].0 * 1e6);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
