// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

// Coherence from synthesized noise trajectories against e^{-χ}.

use std::f64::consts::TAU;

use qsense::control::PulseSequence;
use qsense::mc::{estimate_coherence, TrajectoryConfig};
use qsense::noise::{coherence_chi, NoiseSpectrum};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = NoiseSpectrum::single_line(2e4, TAU * 22e3, TAU * 2e3)?;
    let cfg = TrajectoryConfig::for_spectrum(&spec, 2000, 42)?;
    for (n, tau) in [(8, 24.4e-6), (4, 20e-6)] {
        let seq = PulseSequence::cp(n, tau)?;
        let chi = coherence_chi(&seq, &spec)?;
        let est = estimate_coherence(&seq, &spec, &cfg)?;
        println!(
            "CP-{n}, tau = {:.1} µs: e^-chi = {:.4}, trajectories {:.4} ± {:.4} ({:.1} SE)",
            tau * 1e6,
            (-chi).exp(),
            est.coherence,
            est.stderr,
            est.deviation(chi)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
