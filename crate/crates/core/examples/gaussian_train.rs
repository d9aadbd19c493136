// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

// CP-50 against a train of gaussian pulses: the phase peaks when the pulse
// spacing matches the train period.

use qsense::field::FieldModel;
use qsense::noise::NoiseSpectrum;
use qsense::optimizer::{linspace, sweep_t, SequenceFamily};
use qsense::sensing::SensorParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (sigma, period, n) = (2e-6, 11.2e-6, 50);
    let field = FieldModel::gaussian_train(sigma, period, 60)?;
    let totals = linspace(200e-6, 360e-6, 81);
    let reports = sweep_t(
        &field,
        &NoiseSpectrum::zero(),
        &SequenceFamily::Cp(n),
        &totals,
        &SensorParams::default(),
    )?;
    let peak = reports
        .iter()
        .max_by(|a, b| a.phase.abs().total_cmp(&b.phase.abs()))
        .ok_or("empty sweep")?;
    println!(
        "largest |phi| = {:.3} rad/µT at T = {:.0} µs (n * period / 2 = {:.0} µs)",
        peak.phase.abs(),
        peak.duration * 1e6,
        n as f64 * period / 2.0 * 1e6
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
