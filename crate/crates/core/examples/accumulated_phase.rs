// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

// Phase picked up from a known AC field, closed form against brute-force
// integration of y(t) b(t).

use qsense::control::PulseSequence;
use qsense::field::FieldModel;
use qsense::sensing::{accumulated_phase, SensorParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let field = FieldModel::monochromatic(20.5e3, 0.3)?;
    let params = SensorParams::default();
    println!("{:>8} {:>16} {:>16}", "T (µs)", "phi (rad/µT)", "midpoint sum");
    for t_us in [100.0, 150.0, 195.1, 250.0] {
        let seq = PulseSequence::cp(8, t_us * 1e-6 / 8.0)?;
        let phi = accumulated_phase(&seq, &field, &params)?;
        let steps = 200_000;
        let dt = seq.duration() / steps as f64;
        let mut sum = 0.0;
        for k in 0..steps {
            let t = (k as f64 + 0.5) * dt;
            sum += seq.modulation_at(t)? * field.eval(t)? * dt;
        }
        let brute = params.coupling() * sum;
        println!("{t_us:>8.1} {phi:>16.6} {brute:>16.6}");
        if (phi - brute).abs() > 1e-6 * phi.abs().max(1.0) {
            return Err(format!("phase mismatch at T = {t_us} µs").into());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
