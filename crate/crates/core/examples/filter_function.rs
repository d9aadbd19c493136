// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

// CP filter |ỹ(ω)|² from the pulse timings, checked against the closed form.

use std::f64::consts::{PI, TAU};

use qsense::control::{cp_filter_reference, PulseSequence};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (n, duration) = (8, 195e-6);
    let seq = PulseSequence::cp(n, duration / n as f64)?;
    println!(
        "CP-{n}, T = {:.1} µs, pulses at {:?} µs",
        duration * 1e6,
        seq.pulses()
            .iter()
            .map(|t| (t * 1e6 * 100.0).round() / 100.0)
            .collect::<Vec<_>>()
    );
    println!("{:>10} {:>14} {:>14}", "nu (kHz)", "|y(w)|^2 (s^2)", "reference");
    for nu_khz in [5.0, 12.0, 18.0, 20.5, 23.0, 31.0, 60.0] {
        let nu = nu_khz * 1e3;
        let direct = seq.filter(TAU * nu);
        // α = -πνT puts all of |ỹ(2πν)|² into the even-n reference
        let reference = duration * duration * cp_filter_reference(n, duration, nu, -PI * nu * duration)?;
        println!("{nu_khz:>10.1} {direct:>14.6e} {reference:>14.6e}");
        if ((direct - reference) / reference.max(1e-30)).abs() > 1e-9 && reference > 1e-20 {
            return Err(format!("filter mismatch at {nu_khz} kHz").into());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
