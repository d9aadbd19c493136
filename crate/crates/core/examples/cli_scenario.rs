// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

// Drive the command-line front end on a bundled scenario.

use std::path::Path;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/gaussian_train_sweep.toml");
    let out = tempfile::tempdir()?;
    let code = qsense::cli::main_with_args([
        "qsense".as_ref(),
        "sweep".as_ref(),
        "--config".as_ref(),
        scenario.as_os_str(),
        "--out".as_ref(),
        out.path().as_os_str(),
    ]);
    if code != 0 {
        return Err(format!("qsense exited with {code}").into());
    }
    let csv = std::fs::read_to_string(out.path().join("sweep.csv"))?;
    println!(
        "{} rows, header: {}",
        csv.lines().count() - 1,
        csv.lines().next().unwrap_or("")
    );
    println!("{}", std::fs::read_to_string(out.path().join("manifest.toml"))?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
