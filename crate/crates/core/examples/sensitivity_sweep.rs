// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

// η over sensing time for CP-8 sensing a 20.5 kHz tone, with and without
// a noise line next to the signal.

use std::f64::consts::TAU;

use qsense::field::FieldModel;
use qsense::noise::{ChiEngine, NoiseSpectrum};
use qsense::optimizer::{linspace, sweep_t, SequenceFamily};
use qsense::sensing::SensorParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let field = FieldModel::monochromatic(20.5e3, 0.0)?;
    let params = SensorParams::default();
    let totals = linspace(100e-6, 300e-6, 201);
    let quiet = sweep_t(&field, &NoiseSpectrum::zero(), &SequenceFamily::Cp(8), &totals, &params)?;
    let line = NoiseSpectrum::single_line(2e4, TAU * 22e3, TAU * 2e3)?;
    let noisy = sweep_t(
        &field,
        &ChiEngine::new(&line, 300e-6),
        &SequenceFamily::Cp(8),
        &totals,
        &params,
    )?;
    let best = |r: &[qsense::sensing::SensitivityReport]| {
        r.iter()
            .min_by(|a, b| a.eta.total_cmp(&b.eta))
            .copied()
            .expect("non-empty sweep")
    };
    let (q, n) = (best(&quiet), best(&noisy));
    println!("quiet: best T = {:.1} µs, eta = {:.4e} µT/√Hz", q.duration * 1e6, q.eta);
    println!(
        "noisy: best T = {:.1} µs, eta = {:.4e} µT/√Hz, chi = {:.3}",
        n.duration * 1e6,
        n.eta,
        n.chi
    );
    if !(n.eta >= q.eta) {
        return Err("noise cannot improve the sensitivity".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
