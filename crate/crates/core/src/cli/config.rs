// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration. Units: seconds, Hz, µT and radians; spectral
//! quantities in rad/s.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Command;
use crate::field::{FieldModel, Tone};
use crate::io;
use crate::noise::{GaussianLine, NoiseSpectrum};
use crate::sensing::{SensorParams, NV_GYROMAGNETIC_RATIO};

/// Every key, as printed by `--help`.
pub const CONFIG_KEYS: &str = "\
Config keys (TOML):
  seed                      u64, overridden by --seed
  out                       output directory, overridden by --out
  [field]   kind            multitone | gaussian_train | single_gaussian | tabulated
            weights         multitone weights, summing to 1
            freqs_hz        multitone frequencies
            phases_rad      per-tone phases (or phase_rad, shared by all tones)
            phase_rad       shared tone phase
            sigma_s         gaussian width
            period_s        gaussian train period
            reps            gaussian train repetitions
            center_s        single gaussian center
            samples_path    CSV t_s,value on a uniform grid starting at 0
  [noise]   kind            zero | mixture | tabulated
            amplitudes_per_s, centers_rad_s, widths_rad_s   inline mixture
            path            CSV A_per_s,omega0_rad_s,sigma_rad_s (mixture)
                            or omega_rad_s,S_per_s (tabulated)
  [sensor]  gamma_hz_per_ut gyromagnetic ratio (default 2.81e4)
  [sweep]   n, t_min_s, t_max_s, steps, template_path (CSV t_pulse_s)
  [optimize] space          time_phase | intervals
            n, t_min_s, t_max_s                 time_phase bounds on T
            phase_min_rad, phase_max_rad        optional phase search range
            total_s | totals_s                  fixed T, or a grid of fixed T
            warm_start_path                     CSV t_pulse_s
            min_spacing_s, allow_small_spacing, max_spacing_s
            restarts, max_evals, reinit, xtol_s, ftol
  [map]     n, t_min_s, t_max_s, t_steps, phase_min_rad, phase_max_rad, phase_steps
  [mc]      n_traj, dt_s, omega_max_rad_s, [[mc.cases]] n, tau_s
  [spectrum] decays_path (CSV tau_s,T_total_s,signal), components
  [calibrate] measured_path (CSV T_s,E), theory_path (CSV T_s,eta_uT_per_sqrtHz)
            or n, t_min_s, t_max_s, steps to compute the theory curve
";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<SensorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrate: Option<CalibrateConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Multitone,
    GaussianTrain,
    SingleGaussian,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub kind: FieldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freqs_hz: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases_rad: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_rad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Zero,
    Mixture,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes_per_s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers_rad_s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widths_rad_s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub gamma_hz_per_ut: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n: usize,
    pub t_min_s: f64,
    pub t_max_s: f64,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    TimePhase,
    Intervals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub space: SpaceKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_min_rad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_max_rad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub totals_s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warm_start_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_spacing_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allow_small_spacing: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_spacing_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reinit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xtol_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ftol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub n: usize,
    pub t_min_s: f64,
    pub t_max_s: f64,
    pub t_steps: usize,
    pub phase_min_rad: f64,
    pub phase_max_rad: f64,
    pub phase_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McCase {
    pub n: usize,
    pub tau_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_traj: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max_rad_s: Option<f64>,
    pub cases: Vec<McCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub decays_path: PathBuf,
    pub components: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub measured_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

/// Problem with a config file, reported with the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

fn need<T: Clone>(v: &Option<T>, key: &str) -> Result<T, ConfigError> {
    v.clone().ok_or_else(|| ConfigError(format!("missing key `{key}`")))
}

fn positive(v: f64, key: &str) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        err(format!("`{key}` must be positive, got {v}"))
    }
}

fn time_range(lo: f64, hi: f64, section: &str) -> Result<(), ConfigError> {
    positive(lo, &format!("{section}.t_min_s"))?;
    positive(hi, &format!("{section}.t_max_s"))?;
    if hi < lo {
        return err(format!("`{section}.t_max_s` is below `{section}.t_min_s`"));
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn present(&self) -> Vec<Command> {
        let mut v = Vec::new();
        if self.sweep.is_some() {
            v.push(Command::Sweep);
        }
        if self.optimize.is_some() {
            v.push(Command::Optimize);
        }
        if self.map.is_some() {
            v.push(Command::Map);
        }
        if self.mc.is_some() {
            v.push(Command::McValidate);
        }
        if self.spectrum.is_some() {
            v.push(Command::SpectrumEstimate);
        }
        if self.calibrate.is_some() {
            v.push(Command::Calibrate);
        }
        v
    }

    /// Static checks: one command block matching `cmd`, required sections
    /// and keys, and existing input files (relative to `base`).
    pub fn validate(&self, cmd: Command, base: &Path) -> Result<(), ConfigError> {
        let present = self.present();
        if present.len() != 1 {
            return err(format!(
                "exactly one command block is allowed, found {}",
                if present.is_empty() {
                    "none".to_string()
                } else {
                    format!("{present:?}")
                }
            ));
        }
        if present[0] != cmd {
            return err(format!("command `{}` needs a [{}] block", cmd.name(), cmd.block()));
        }
        let mut paths: Vec<(&str, &PathBuf)> = Vec::new();
        if let Some(f) = &self.field {
            if let Some(p) = &f.samples_path {
                paths.push(("field.samples_path", p));
            }
        }
        if let Some(n) = &self.noise {
            if let Some(p) = &n.path {
                paths.push(("noise.path", p));
            }
        }
        match cmd {
            Command::Sweep => {
                let s = self.sweep.as_ref().unwrap();
                self.field
                    .as_ref()
                    .ok_or_else(|| ConfigError("sweep needs a [field] block".into()))?;
                if s.n == 0 {
                    return err("`sweep.n` must be at least 1");
                }
                if s.steps == 0 {
                    return err("`sweep.steps` must be at least 1: the T grid is empty");
                }
                time_range(s.t_min_s, s.t_max_s, "sweep")?;
                if s.steps > 1 && s.t_max_s == s.t_min_s {
                    return err("`sweep.t_max_s` equals `sweep.t_min_s` with several steps");
                }
                if let Some(p) = &s.template_path {
                    paths.push(("sweep.template_path", p));
                }
            }
            Command::Optimize => {
                let o = self.optimize.as_ref().unwrap();
                self.field
                    .as_ref()
                    .ok_or_else(|| ConfigError("optimize needs a [field] block".into()))?;
                if o.n == 0 {
                    return err("`optimize.n` must be at least 1");
                }
                if o.phase_min_rad.is_some() != o.phase_max_rad.is_some() {
                    return err("`optimize.phase_min_rad` and `optimize.phase_max_rad` go together");
                }
                match o.space {
                    SpaceKind::TimePhase => {
                        time_range(
                            need(&o.t_min_s, "optimize.t_min_s")?,
                            need(&o.t_max_s, "optimize.t_max_s")?,
                            "optimize",
                        )?;
                    }
                    SpaceKind::Intervals => {
                        if o.total_s.is_some() && o.totals_s.is_some() {
                            return err("use either `optimize.total_s` or `optimize.totals_s`");
                        }
                        if o.total_s.is_none() && o.totals_s.is_none() && o.warm_start_path.is_none() {
                            return err("interval search needs `optimize.total_s`, `optimize.totals_s` or `optimize.warm_start_path`");
                        }
                        if let Some(t) = o.total_s {
                            positive(t, "optimize.total_s")?;
                        }
                        if let Some(ts) = &o.totals_s {
                            if ts.is_empty() {
                                return err("`optimize.totals_s` is empty");
                            }
                            for &t in ts {
                                positive(t, "optimize.totals_s")?;
                            }
                        }
                    }
                }
                if let Some(p) = &o.warm_start_path {
                    paths.push(("optimize.warm_start_path", p));
                }
            }
            Command::Map => {
                let m = self.map.as_ref().unwrap();
                self.field
                    .as_ref()
                    .ok_or_else(|| ConfigError("map needs a [field] block".into()))?;
                if m.n == 0 {
                    return err("`map.n` must be at least 1");
                }
                if m.t_steps == 0 || m.phase_steps == 0 {
                    return err("`map.t_steps` and `map.phase_steps` must be at least 1");
                }
                time_range(m.t_min_s, m.t_max_s, "map")?;
                if !(m.phase_max_rad >= m.phase_min_rad) {
                    return err("`map.phase_max_rad` is below `map.phase_min_rad`");
                }
            }
            Command::McValidate => {
                let m = self.mc.as_ref().unwrap();
                if m.cases.is_empty() {
                    return err("`mc.cases` is empty");
                }
                if m.n_traj < 100 {
                    return err(format!("`mc.n_traj` must be at least 100, got {}", m.n_traj));
                }
                for (i, c) in m.cases.iter().enumerate() {
                    positive(c.tau_s, &format!("mc.cases[{i}].tau_s"))?;
                    if c.n == 0 {
                        return err(format!("`mc.cases[{i}].n` must be at least 1"));
                    }
                }
            }
            Command::SpectrumEstimate => {
                let s = self.spectrum.as_ref().unwrap();
                if s.components == 0 {
                    return err("`spectrum.components` must be at least 1");
                }
                paths.push(("spectrum.decays_path", &s.decays_path));
            }
            Command::Calibrate => {
                let c = self.calibrate.as_ref().unwrap();
                paths.push(("calibrate.measured_path", &c.measured_path));
                match &c.theory_path {
                    Some(p) => paths.push(("calibrate.theory_path", p)),
                    None => {
                        self.field
                            .as_ref()
                            .ok_or_else(|| ConfigError("computing the theory curve needs a [field] block".into()))?;
                        need(&c.n, "calibrate.n")?;
                        let steps = need(&c.steps, "calibrate.steps")?;
                        if steps == 0 {
                            return err("`calibrate.steps` must be at least 1");
                        }
                        time_range(
                            need(&c.t_min_s, "calibrate.t_min_s")?,
                            need(&c.t_max_s, "calibrate.t_max_s")?,
                            "calibrate",
                        )?;
                    }
                }
            }
        }
        for (key, p) in paths {
            let full = base.join(p);
            if !full.is_file() {
                return err(format!("`{key}` points to a missing file: {}", full.display()));
            }
        }
        Ok(())
    }

    pub fn sensor(&self) -> Result<SensorParams, ConfigError> {
        match &self.sensor {
            None => Ok(SensorParams::default()),
            Some(s) => {
                SensorParams::new(s.gamma_hz_per_ut).map_err(|e| ConfigError(format!("sensor.gamma_hz_per_ut: {e}")))
            }
        }
    }

    pub fn field_model(&self, base: &Path) -> Result<FieldModel, ConfigError> {
        let f = self
            .field
            .as_ref()
            .ok_or_else(|| ConfigError("missing [field] block".into()))?;
        let wrap = |e: crate::Error| ConfigError(format!("[field]: {e}"));
        match f.kind {
            FieldKind::Multitone => {
                let freqs = need(&f.freqs_hz, "field.freqs_hz")?;
                let weights = match &f.weights {
                    Some(w) => w.clone(),
                    None if freqs.len() == 1 => vec![1.0],
                    None => return err("missing key `field.weights`"),
                };
                if weights.len() != freqs.len() {
                    return err("`field.weights` and `field.freqs_hz` differ in length");
                }
                let phases = match (&f.phases_rad, f.phase_rad) {
                    (Some(_), Some(_)) => return err("use either `field.phases_rad` or `field.phase_rad`"),
                    (Some(p), None) => {
                        if p.len() != freqs.len() {
                            return err("`field.phases_rad` and `field.freqs_hz` differ in length");
                        }
                        p.clone()
                    }
                    (None, shared) => vec![shared.unwrap_or(0.0); freqs.len()],
                };
                let tones = weights
                    .iter()
                    .zip(&freqs)
                    .zip(&phases)
                    .map(|((&weight, &freq_hz), &phase_rad)| Tone {
                        weight,
                        freq_hz,
                        phase_rad,
                    })
                    .collect();
                FieldModel::multitone(tones).map_err(wrap)
            }
            FieldKind::GaussianTrain => FieldModel::gaussian_train(
                need(&f.sigma_s, "field.sigma_s")?,
                need(&f.period_s, "field.period_s")?,
                need(&f.reps, "field.reps")?,
            )
            .map_err(wrap),
            FieldKind::SingleGaussian => {
                FieldModel::single_gaussian(need(&f.sigma_s, "field.sigma_s")?, need(&f.center_s, "field.center_s")?)
                    .map_err(wrap)
            }
            FieldKind::Tabulated => {
                let p = base.join(need(&f.samples_path, "field.samples_path")?);
                let rows: Vec<io::SampleRow> =
                    io::read_rows(&p).map_err(|e| ConfigError(format!("field.samples_path: {e}")))?;
                let t: Vec<f64> = rows.iter().map(|r| r.t_s).collect();
                let v: Vec<f64> = rows.iter().map(|r| r.value).collect();
                FieldModel::tabulated(&t, &v).map_err(wrap)
            }
        }
    }

    pub fn spectrum(&self, base: &Path) -> Result<NoiseSpectrum, ConfigError> {
        let Some(n) = &self.noise else {
            return Ok(NoiseSpectrum::zero());
        };
        let wrap = |e: crate::Error| ConfigError(format!("[noise]: {e}"));
        match n.kind {
            NoiseKind::Zero => Ok(NoiseSpectrum::zero()),
            NoiseKind::Mixture => {
                if let Some(p) = &n.path {
                    if n.amplitudes_per_s.is_some() {
                        return err("use either `noise.path` or inline `noise.amplitudes_per_s`");
                    }
                    return io::read_mixture(&base.join(p)).map_err(wrap);
                }
                let a = need(&n.amplitudes_per_s, "noise.amplitudes_per_s")?;
                let c = need(&n.centers_rad_s, "noise.centers_rad_s")?;
                let w = need(&n.widths_rad_s, "noise.widths_rad_s")?;
                if a.len() != c.len() || a.len() != w.len() {
                    return err(
                        "`noise.amplitudes_per_s`, `noise.centers_rad_s` and `noise.widths_rad_s` differ in length",
                    );
                }
                let lines = a
                    .iter()
                    .zip(&c)
                    .zip(&w)
                    .map(|((&amplitude, &center), &width)| GaussianLine {
                        amplitude,
                        center,
                        width,
                    })
                    .collect();
                NoiseSpectrum::gaussian_mixture(lines).map_err(wrap)
            }
            NoiseKind::Tabulated => {
                let p = need(&n.path, "noise.path")?;
                io::read_tabulated_spectrum(&base.join(p)).map_err(wrap)
            }
        }
    }
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            gamma_hz_per_ut: NV_GYROMAGNETIC_RATIO,
        }
    }
}
