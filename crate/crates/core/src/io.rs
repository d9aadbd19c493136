// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

//! CSV readers and writers with stable headers.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::noise::{DecayCurve, DecayPoint, GaussianLine, NoiseSpectrum};
use crate::sensing::SensitivityReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(rename = "T_s")]
    pub duration: f64,
    #[serde(rename = "phi_rad_per_uT")]
    pub phase: f64,
    pub chi: f64,
    #[serde(rename = "eta_uT_per_sqrtHz")]
    pub eta: f64,
    #[serde(rename = "fisher_per_uT2")]
    pub fisher: f64,
}

impl From<&SensitivityReport> for ReportRow {
    fn from(r: &SensitivityReport) -> Self {
        Self {
            duration: r.duration,
            phase: r.phase,
            chi: r.chi,
            eta: r.eta,
            fisher: r.fisher_per_shot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseRow {
    pub t_pulse_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineRow {
    #[serde(rename = "A_per_s")]
    pub amplitude: f64,
    #[serde(rename = "omega0_rad_s")]
    pub center: f64,
    #[serde(rename = "sigma_rad_s")]
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPointRow {
    pub omega_rad_s: f64,
    #[serde(rename = "S_per_s")]
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub tau_s: f64,
    #[serde(rename = "T_total_s")]
    pub total_s: f64,
    pub signal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub t_s: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    #[serde(rename = "T_s")]
    pub duration: f64,
    #[serde(rename = "E")]
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryRow {
    #[serde(rename = "T_s")]
    pub duration: f64,
    #[serde(rename = "eta_uT_per_sqrtHz")]
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub chi_analytic: f64,
    pub coherence_mc: f64,
    pub stderr: f64,
    pub n_traj: usize,
    pub seed: u64,
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows with a header chosen at run time.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_reports(path: &Path, reports: &[SensitivityReport]) -> Result<()> {
    let rows: Vec<ReportRow> = reports.iter().map(ReportRow::from).collect();
    write_rows(path, &rows)
}

pub fn read_pulses(path: &Path) -> Result<Vec<f64>> {
    Ok(read_rows::<PulseRow>(path)?.into_iter().map(|r| r.t_pulse_s).collect())
}

pub fn write_pulses(path: &Path, pulses: &[f64]) -> Result<()> {
    let rows: Vec<PulseRow> = pulses.iter().map(|&t| PulseRow { t_pulse_s: t }).collect();
    write_rows(path, &rows)
}

pub fn read_mixture(path: &Path) -> Result<NoiseSpectrum> {
    let lines = read_rows::<LineRow>(path)?
        .into_iter()
        .map(|r| GaussianLine {
            amplitude: r.amplitude,
            center: r.center,
            width: r.width,
        })
        .collect();
    NoiseSpectrum::gaussian_mixture(lines)
}

pub fn write_mixture(path: &Path, lines: &[GaussianLine]) -> Result<()> {
    let rows: Vec<LineRow> = lines
        .iter()
        .map(|l| LineRow {
            amplitude: l.amplitude,
            center: l.center,
            width: l.width,
        })
        .collect();
    write_rows(path, &rows)
}

pub fn read_tabulated_spectrum(path: &Path) -> Result<NoiseSpectrum> {
    let rows = read_rows::<SpectrumPointRow>(path)?;
    NoiseSpectrum::tabulated(
        rows.iter().map(|r| r.omega_rad_s).collect(),
        rows.iter().map(|r| r.value).collect(),
    )
}

/// Decay rows grouped into curves by pulse spacing; the pulse count of each
/// point is `round(T/τ)`.
pub fn read_decays(path: &Path) -> Result<Vec<DecayCurve>> {
    let rows = read_rows::<DecayRow>(path)?;
    let mut taus: Vec<f64> = rows.iter().map(|r| r.tau_s).collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    taus.into_iter()
        .map(|tau| {
            let mut pts: Vec<DecayPoint> = rows
                .iter()
                .filter(|r| r.tau_s == tau)
                .map(|r| {
                    let n = (r.total_s / tau).round();
                    if !(n >= 1.0) {
                        return Err(invalid(format!(
                            "decay point T = {} s is shorter than tau = {tau} s",
                            r.total_s
                        )));
                    }
                    Ok(DecayPoint {
                        total_time: r.total_s,
                        signal: r.signal,
                        pulses: n as usize,
                    })
                })
                .collect::<Result<_>>()?;
            pts.sort_by(|a, b| a.total_time.total_cmp(&b.total_time));
            DecayCurve::new(tau, pts)
        })
        .collect()
}

pub fn write_decays(path: &Path, curves: &[DecayCurve]) -> Result<()> {
    let rows: Vec<DecayRow> = curves
        .iter()
        .flat_map(|c| {
            c.points.iter().map(move |p| DecayRow {
                tau_s: c.tau,
                total_s: p.total_time,
                signal: p.signal,
            })
        })
        .collect();
    write_rows(path, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_header_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let r = crate::sensing::SensitivityReport {
            duration: 1e-4,
            phase: 2.0,
            chi: 0.1,
            eta: 0.3,
            fisher_per_shot: 4.0,
            max_slope: 1.0,
        };
        write_reports(&p, &[r]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("T_s,phi_rad_per_uT,chi,eta_uT_per_sqrtHz,fisher_per_uT2\n"));
        let back: Vec<ReportRow> = read_rows(&p).unwrap();
        assert_eq!(back[0], ReportRow::from(&r));
    }

    #[test]
    fn decays_group_by_spacing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(
            &p,
            "tau_s,T_total_s,signal\n1e-6,4e-6,0.9\n2e-6,4e-6,0.8\n1e-6,2e-6,0.95\n",
        )
        .unwrap();
        let c = read_decays(&p).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].points.len(), 2);
        assert_eq!(c[0].points[0].pulses, 2);
        assert_eq!(c[1].points[0].pulses, 2);
    }

    #[test]
    fn pulses_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_pulses(&p, &[1e-6, 3.5e-6]).unwrap();
        assert_eq!(read_pulses(&p).unwrap(), vec![1e-6, 3.5e-6]);
    }
}
