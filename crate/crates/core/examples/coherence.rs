// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

// Decoherence exponent χ of CP sequences under a gaussian noise line, by
// frequency quadrature and by the lag-domain kernel.

use std::f64::consts::TAU;

use qsense::control::PulseSequence;
use qsense::noise::{coherence_chi, ChiEngine, Decoherence, NoiseSpectrum};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = NoiseSpectrum::single_line(2e4, TAU * 22e3, TAU * 2e3)?;
    let engine = ChiEngine::new(&spec, 300e-6);
    println!(
        "{:>4} {:>8} {:>12} {:>12} {:>10}",
        "n", "T (µs)", "quadrature", "kernel", "e^-chi"
    );
    for (n, t_us) in [(1, 50.0), (4, 100.0), (8, 182.0), (8, 195.1), (16, 250.0)] {
        let seq = PulseSequence::cp(n, t_us * 1e-6 / n as f64)?;
        let q = coherence_chi(&seq, &spec)?;
        let k = engine.chi(&seq)?;
        println!("{n:>4} {t_us:>8.1} {q:>12.6} {k:>12.6} {:>10.4}", (-q).exp());
        if (q - k).abs() > 1e-6 * q.max(1e-3) {
            return Err("quadrature and kernel disagree".into());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
