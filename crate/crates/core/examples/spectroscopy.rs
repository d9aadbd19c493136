// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

// Noise spectroscopy closed loop: CPMG decays from a two-line spectrum,
// T₂ per pulse spacing, then a two-line mixture fit.

use std::f64::consts::{PI, TAU};

use qsense::control::PulseSequence;
use qsense::noise::{
    fit_spectrum_from_decays, ChiEngine, DecayCurve, DecayPoint, Decoherence, GaussianLine, NoiseSpectrum,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let truth = NoiseSpectrum::gaussian_mixture(vec![
        GaussianLine {
            amplitude: 2e4,
            center: TAU * 100e3,
            width: TAU * 12e3,
        },
        GaussianLine {
            amplitude: 1e4,
            center: TAU * 200e3,
            width: TAU * 15e3,
        },
    ])?;
    let engine = ChiEngine::new(&truth, 1.1e-3);
    let mut curves = Vec::new();
    for k in 0..13 {
        let tau = 1.0 / (2.0 * (60e3 + 200e3 * k as f64 / 12.0));
        let t2 = PI * PI / (4.0 * truth.eval(PI / tau).max(1.0));
        let n_max = (((3.0 * t2).min(1e-3) / tau).ceil() as usize).max(8);
        let mut points = Vec::new();
        let mut last = 0;
        for j in 1..=8 {
            let n = (n_max * j).div_ceil(8);
            if n > last {
                last = n;
                let seq = PulseSequence::cp(n, tau)?;
                let chi = engine.chi(&seq)?;
                points.push(DecayPoint {
                    total_time: seq.duration(),
                    signal: 0.5 * (1.0 + (-chi).exp()),
                    pulses: n,
                });
            }
        }
        curves.push(DecayCurve::new(tau, points)?);
    }
    let est = fit_spectrum_from_decays(&curves, 2)?;
    for l in est.spectrum.lines().unwrap_or(&[]) {
        println!(
            "line: A = {:.0} /s, center = {:.1} kHz, width = {:.1} kHz",
            l.amplitude,
            l.center / TAU / 1e3,
            l.width / TAU / 1e3
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
