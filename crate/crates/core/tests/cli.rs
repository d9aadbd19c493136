// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn qsense(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsense"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("QSENSE_THREADS")
        .output()
        .expect("binary runs")
}

fn run_config(cmd: &str, text: &str) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = qsense(&[cmd, "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    (out, dir)
}

const TONE_SWEEP: &str = r#"
[field]
kind = "multitone"
freqs_hz = [20.5e3]

[sweep]
n = 8
t_min_s = 150e-6
t_max_s = 250e-6
steps = 21
"#;

#[test]
fn help_lists_commands_and_keys() {
    let out = Command::new(env!("CARGO_BIN_EXE_qsense"))
        .arg("--help")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for word in [
        "sweep",
        "optimize",
        "map",
        "mc-validate",
        "spectrum-estimate",
        "calibrate",
        "--config",
        "--threads",
        "QSENSE_THREADS",
        "gamma_hz_per_ut",
        "decays_path",
    ] {
        assert!(text.contains(word), "--help lacks {word}");
    }
}

#[test]
fn sweep_output_is_stable() {
    let (out, dir) = run_config("sweep", TONE_SWEEP);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("T_s,phi_rad_per_uT,chi,eta_uT_per_sqrtHz,fisher_per_uT2")
    );
    assert_eq!(lines.count(), 21);
    // no noise: χ column is zero and the best η sits next to n/(2ν) = 195.1 µs
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let rows: Vec<Vec<f64>> = rdr
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(rows.iter().all(|r| r[2] == 0.0));
    let best = rows.iter().min_by(|a, b| a[3].total_cmp(&b[3])).unwrap();
    assert!((best[0] - 195e-6).abs() < 5.1e-6, "{}", best[0]);
    assert!(dir.path().join("out/sweep.svg").is_file());
    let manifest = std::fs::read_to_string(dir.path().join("out/manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"sweep\""));
    assert!(manifest.contains("config_sha256"));
}

#[test]
fn seeded_optimization_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = scenario("tone_noisy_optimize.toml");
    for dir in [&a, &b] {
        let out = qsense(
            &["optimize", "--config", cfg.to_str().unwrap(), "--seed", "9"],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["optimum.csv", "sequence.csv", "restarts.csv", "manifest.toml"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between identical runs");
    }
    let manifest = std::fs::read_to_string(a.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 9"));
    assert!(manifest.contains("evaluations"));
}

#[test]
fn thread_count_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, TONE_SWEEP).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qsense"))
        .args(["sweep", "--config", cfg.to_str().unwrap(), "--out"])
        .arg(dir.path().join("out"))
        .env("QSENSE_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let manifest = std::fs::read_to_string(dir.path().join("out/manifest.toml")).unwrap();
    assert!(manifest.contains("threads = 3"), "{manifest}");
}

#[test]
fn config_errors_exit_with_2() {
    for (what, text) in [
        ("unknown key", TONE_SWEEP.replace("steps = 21", "steps = 21\nspeed = 1")),
        ("empty grid", TONE_SWEEP.replace("steps = 21", "steps = 0")),
        (
            "reversed range",
            TONE_SWEEP.replace("t_max_s = 250e-6", "t_max_s = 50e-6"),
        ),
        (
            "missing file",
            TONE_SWEEP.replace("steps = 21", "steps = 21\ntemplate_path = \"absent.csv\""),
        ),
        (
            "bad weights",
            TONE_SWEEP.replace("freqs_hz = [20.5e3]", "freqs_hz = [20.5e3]\nweights = [0.5]"),
        ),
        (
            "two blocks",
            format!("{TONE_SWEEP}\n[spectrum]\ndecays_path = \"d.csv\"\ncomponents = 1\n"),
        ),
        ("not toml", "[field\n".to_string()),
    ] {
        let (out, _dir) = run_config("sweep", &text);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{what}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let (out, _dir) = run_config("map", TONE_SWEEP);
    assert_eq!(out.status.code(), Some(2), "command without its block");
    let out = Command::new(env!("CARGO_BIN_EXE_qsense"))
        .arg("sweep")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "missing --config");
}

#[test]
fn infeasible_search_exits_with_1() {
    let text = r#"
[field]
kind = "multitone"
freqs_hz = [20.5e3]

[optimize]
space = "intervals"
n = 50
total_s = 10e-6
"#;
    let (out, _dir) = run_config("optimize", text);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn bundled_spectrum_and_calibration_scenarios_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = qsense(
        &[
            "spectrum-estimate",
            "--config",
            scenario("spectrum_estimate.toml").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<qsense::io::LineRow> = qsense::io::read_rows(&dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(lines.len(), 2);
    let khz: Vec<f64> = lines.iter().map(|l| l.center / std::f64::consts::TAU / 1e3).collect();
    assert!((khz[0] - 100.0).abs() < 5.0 && (khz[1] - 200.0).abs() < 10.0, "{khz:?}");

    let out = qsense(
        &["calibrate", "--config", scenario("calibrate.toml").to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let cal = std::fs::read_to_string(dir.path().join("calibration.csv")).unwrap();
    let c: f64 = cal.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    // the measurement was synthesized with C = 0.05 and 1% noise
    assert!((c - 0.05).abs() < 0.005, "C = {c}");
}

#[test]
fn mc_validate_scenario_stays_in_band() {
    let dir = tempfile::tempdir().unwrap();
    let out = qsense(
        &[
            "mc-validate",
            "--config",
            scenario("mc_validate.toml").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<qsense::io::McRow> = qsense::io::read_rows(&dir.path().join("mc.csv")).unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(((-r.chi_analytic).exp() - r.coherence_mc).abs() <= 3.0 * r.stderr);
    }
}
