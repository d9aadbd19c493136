// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line driver behind the `qsense` binary. Exit codes: 0 success,
//! 1 runtime failure, 2 usage or config error.

pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::control::{PulseSequence, SymmetricIntervals};
use crate::error::{Error, Result};
use crate::field::FieldModel;
use crate::io;
use crate::mc::{estimate_coherence, TrajectoryConfig};
use crate::noise::{coherence_chi, fit_spectrum_from_decays, ChiEngine, NoiseSpectrum};
use crate::optimizer::{
    grid_map, linspace, optimize_intervals, optimize_intervals_grid, optimize_time_phase, sweep_t, IntervalSpace,
    NelderMeadOptions, OptimizationResult, SequenceFamily,
};
use crate::sensing::{calibrate_c, SensorParams};
use crate::svg;
pub use config::{ConfigError, RunConfig, CONFIG_KEYS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// η, φ and χ of CP-n (or a pulse template) over a grid of T
    Sweep,
    /// Nelder-Mead search over (T, α) or over symmetric windows
    Optimize,
    /// dense 1/η map over (T, α)
    Map,
    /// check χ against Monte Carlo trajectories
    McValidate,
    /// fit a gaussian-mixture spectrum to CPMG decays
    SpectrumEstimate,
    /// fit C = E_max η_min and predict the observable
    Calibrate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sweep => "sweep",
            Self::Optimize => "optimize",
            Self::Map => "map",
            Self::McValidate => "mc-validate",
            Self::SpectrumEstimate => "spectrum-estimate",
            Self::Calibrate => "calibrate",
        }
    }

    pub fn block(self) -> &'static str {
        match self {
            Self::Sweep => "sweep",
            Self::Optimize => "optimize",
            Self::Map => "map",
            Self::McValidate => "mc",
            Self::SpectrumEstimate => "spectrum",
            Self::Calibrate => "calibrate",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qsense",
    version,
    about = "Sensitivity-optimal pulse sequences for a dephasing qubit sensor"
)]
#[command(after_help = CONFIG_KEYS)]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// output directory (default: config `out`, else ./out)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed for restarts and trajectories
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// worker threads
    #[arg(long, global = true, env = "QSENSE_THREADS")]
    pub threads: Option<usize>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Config(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    version: String,
    config_sha256: String,
    seed: u64,
    threads: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluations: Option<usize>,
    outputs: Vec<String>,
}

/// What a command produced, for the manifest.
#[derive(Default)]
struct Outcome {
    outputs: Vec<String>,
    evaluations: Option<usize>,
    /// set when outputs were written but the run still failed
    failure: Option<String>,
}

/// Parse `argv` and run; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Args::try_parse_from(argv) {
        Ok(args) => run(&args),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                2
            } else {
                0
            }
        }
    }
}

pub fn run(args: &Args) -> i32 {
    match execute(args) {
        Ok(()) => 0,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            2
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}

fn execute(args: &Args) -> Result<(), Failure> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config is required".into()))?;
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = RunConfig::parse(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    cfg.validate(args.command, &base)?;
    let threads = match args.threads {
        Some(0) => return Err(Failure::Config("--threads must be at least 1".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(|o| base.join(o)))
        .unwrap_or_else(|| "out".into());
    std::fs::create_dir_all(&out).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", out.display())))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let ctx = Context {
        cfg: &cfg,
        base: &base,
        out: &out,
        seed,
    };
    let outcome = pool.install(|| match args.command {
        Command::Sweep => sweep(&ctx),
        Command::Optimize => optimize(&ctx),
        Command::Map => map(&ctx),
        Command::McValidate => mc_validate(&ctx),
        Command::SpectrumEstimate => spectrum_estimate(&ctx),
        Command::Calibrate => calibrate(&ctx),
    })?;

    let manifest = Manifest {
        command: args.command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: format!("{:x}", Sha256::digest(text.as_bytes())),
        seed,
        threads,
        evaluations: outcome.evaluations,
        outputs: outcome.outputs,
    };
    let body = toml::to_string(&manifest).map_err(|e| Failure::Runtime(e.to_string()))?;
    std::fs::write(out.join("manifest.toml"), body).map_err(Error::from)?;
    match outcome.failure {
        Some(m) => Err(Failure::Runtime(m)),
        None => Ok(()),
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    base: &'a Path,
    out: &'a Path,
    seed: u64,
}

impl Context<'_> {
    fn field(&self) -> Result<FieldModel, Failure> {
        Ok(self.cfg.field_model(self.base)?)
    }

    fn spectrum(&self) -> Result<NoiseSpectrum, Failure> {
        Ok(self.cfg.spectrum(self.base)?)
    }

    fn params(&self) -> Result<SensorParams, Failure> {
        Ok(self.cfg.sensor()?)
    }

    fn path(&self, rel: &Path) -> PathBuf {
        self.base.join(rel)
    }

    fn write_svg(&self, name: &str, body: &str) -> Result<(), Failure> {
        std::fs::write(self.out.join(name), body).map_err(Error::from)?;
        Ok(())
    }
}

fn sweep(ctx: &Context) -> Result<Outcome, Failure> {
    let s = ctx.cfg.sweep.as_ref().expect("validated");
    let field = ctx.field()?;
    let spec = ctx.spectrum()?;
    let params = ctx.params()?;
    let family = match &s.template_path {
        Some(p) => SequenceFamily::Template(SymmetricIntervals::from_pulse_times(&io::read_pulses(&ctx.path(p))?)?),
        None => SequenceFamily::Cp(s.n),
    };
    let totals = linspace(s.t_min_s, s.t_max_s, s.steps);
    let engine = ChiEngine::new(&spec, s.t_max_s);
    let reports = sweep_t(&field, &engine, &family, &totals, &params)?;
    io::write_reports(&ctx.out.join("sweep.csv"), &reports)?;

    let norm = |v: Vec<(f64, f64)>| {
        let m = v.iter().map(|p| p.1).filter(|x| x.is_finite()).fold(0.0, f64::max);
        let m = if m > 0.0 { m } else { 1.0 };
        v.into_iter().map(|(x, y)| (x * 1e6, y / m)).collect::<Vec<_>>()
    };
    let inv = norm(reports.iter().map(|r| (r.duration, 1.0 / r.eta)).collect());
    let phi = norm(reports.iter().map(|r| (r.duration, r.phase.abs())).collect());
    let plot = svg::line_plot(
        &format!("{}-pulse sweep", family.pulses()),
        "T (µs)",
        "normalized",
        &[
            svg::Series {
                label: "1/η".into(),
                points: inv,
            },
            svg::Series {
                label: "|φ|".into(),
                points: phi,
            },
        ],
    );
    ctx.write_svg("sweep.svg", &plot)?;
    Ok(Outcome {
        outputs: vec!["sweep.csv".into(), "sweep.svg".into()],
        ..Outcome::default()
    })
}

fn nm_options(o: &config::OptimizeConfig, seed: u64) -> NelderMeadOptions {
    let mut opts = NelderMeadOptions {
        seed,
        ..NelderMeadOptions::default()
    };
    if let Some(r) = o.restarts {
        opts.restarts = r;
    }
    if let Some(m) = o.max_evals {
        opts.max_evals = m;
    }
    if let Some(r) = o.reinit {
        opts.reinit = r;
    }
    if let Some(x) = o.xtol_s {
        opts.xtol = x;
    }
    if let Some(f) = o.ftol {
        opts.ftol = f;
    }
    opts
}

fn optimum_rows(res: &OptimizationResult) -> (Vec<String>, Vec<Vec<f64>>) {
    let d = res.best.len();
    let mut header: Vec<String> = (0..d).map(|k| format!("param_{k}")).collect();
    header.push("eta".into());
    let mut row = res.best.clone();
    row.push(res.value);
    (header, vec![row])
}

fn restart_rows(res: &OptimizationResult) -> (Vec<String>, Vec<Vec<f64>>) {
    let d = res.best.len();
    let mut header: Vec<String> = vec!["restart".into(), "evaluations".into(), "converged".into()];
    header.extend((0..d).map(|k| format!("param_{k}")));
    header.push("eta".into());
    let rows = res
        .restarts
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = vec![i as f64, r.evaluations as f64, if r.converged { 1.0 } else { 0.0 }];
            v.extend_from_slice(&r.best);
            v.push(r.value);
            v
        })
        .collect();
    (header, rows)
}

fn optimize(ctx: &Context) -> Result<Outcome, Failure> {
    let o = ctx.cfg.optimize.as_ref().expect("validated");
    let field = ctx.field()?;
    let spec = ctx.spectrum()?;
    let params = ctx.params()?;
    let opts = nm_options(o, ctx.seed);
    let phase = o.phase_min_rad.zip(o.phase_max_rad);
    let mut outputs = vec!["optimum.csv".to_string(), "sequence.csv".into(), "restarts.csv".into()];

    let (res, seq) = match o.space {
        config::SpaceKind::TimePhase => {
            let (lo, hi) = (o.t_min_s.expect("validated"), o.t_max_s.expect("validated"));
            let engine = ChiEngine::new(&spec, hi);
            let res = optimize_time_phase(&field, &engine, o.n, (lo, hi), phase, &params, &opts)?;
            let seq = PulseSequence::cp(o.n, res.best[0] / o.n as f64)?;
            (res, seq)
        }
        config::SpaceKind::Intervals => {
            let warm = match &o.warm_start_path {
                Some(p) => Some(SymmetricIntervals::from_pulse_times(&io::read_pulses(&ctx.path(p))?)?),
                None => None,
            };
            if let Some(w) = &warm {
                if w.len() != o.n {
                    return Err(Failure::Config(format!(
                        "warm start has {} pulses but `optimize.n` = {}",
                        w.len(),
                        o.n
                    )));
                }
            }
            let mut space = IntervalSpace::new(o.n, o.total_s)?;
            if let Some(s) = o.min_spacing_s {
                space = space.with_min_spacing(s, o.allow_small_spacing.unwrap_or(false))?;
            }
            if let Some(s) = o.max_spacing_s {
                space = space.with_max_spacing(s)?;
            }
            if let Some((lo, hi)) = phase {
                space = space.with_phase(lo, hi)?;
            }
            match &o.totals_s {
                Some(totals) => {
                    let longest = totals.iter().copied().fold(0.0, f64::max);
                    let engine = ChiEngine::new(&spec, longest);
                    let grid = optimize_intervals_grid(&field, &engine, &space, totals, &params, &opts)?;
                    let rows: Vec<Vec<f64>> = grid.runs.iter().map(|(t, r)| vec![*t, r.value]).collect();
                    io::write_table(&ctx.out.join("grid.csv"), &["T_s".into(), "eta".into()], &rows)?;
                    outputs.push("grid.csv".into());
                    let evaluations: usize = grid.runs.iter().map(|(_, r)| r.evaluations).sum();
                    let (t, best) = grid.best_run();
                    let best = best.clone();
                    let seq = space.with_total(Some(t))?.sequence(&best.best)?;
                    (OptimizationResult { evaluations, ..best }, seq)
                }
                None => {
                    // free T: allow the search up to twice the warm start
                    let horizon = o
                        .total_s
                        .unwrap_or_else(|| 2.0 * warm.as_ref().map_or(0.0, |w| w.total()));
                    let engine = ChiEngine::new(&spec, horizon);
                    let res = optimize_intervals(&field, &engine, &space, warm.as_ref(), &params, &opts)?;
                    let seq = space.sequence(&res.best)?;
                    (res, seq)
                }
            }
        }
    };
    let (h, rows) = optimum_rows(&res);
    io::write_table(&ctx.out.join("optimum.csv"), &h, &rows)?;
    io::write_pulses(&ctx.out.join("sequence.csv"), seq.pulses())?;
    let (h, rows) = restart_rows(&res);
    io::write_table(&ctx.out.join("restarts.csv"), &h, &rows)?;
    let failure = (res.violations > 0).then(|| format!("{} infeasible points remain in the result", res.violations));
    Ok(Outcome {
        outputs,
        evaluations: Some(res.evaluations),
        failure,
    })
}

fn map(ctx: &Context) -> Result<Outcome, Failure> {
    let m = ctx.cfg.map.as_ref().expect("validated");
    let field = ctx.field()?;
    let spec = ctx.spectrum()?;
    let params = ctx.params()?;
    let engine = ChiEngine::new(&spec, m.t_max_s);
    let g = grid_map(
        &field,
        &engine,
        m.n,
        (m.t_min_s, m.t_max_s),
        (m.phase_min_rad, m.phase_max_rad),
        (m.t_steps, m.phase_steps),
        &params,
    )?;
    let mut rows = Vec::with_capacity(g.durations.len() * g.phases.len());
    for (i, &a) in g.phases.iter().enumerate() {
        for (j, &t) in g.durations.iter().enumerate() {
            rows.push(vec![t, a, g.inv_eta[i][j]]);
        }
    }
    io::write_table(
        &ctx.out.join("map.csv"),
        &["T_s".into(), "alpha_rad".into(), "inv_eta".into()],
        &rows,
    )?;
    let us: Vec<f64> = g.durations.iter().map(|t| t * 1e6).collect();
    let plot = svg::heat_map(
        &format!("1/η, {}-pulse CP", m.n),
        &us,
        &g.phases,
        &g.inv_eta,
        "T (µs)",
        "α (rad)",
    );
    ctx.write_svg("map.svg", &plot)?;
    Ok(Outcome {
        outputs: vec!["map.csv".into(), "map.svg".into()],
        evaluations: Some(rows.len()),
        ..Outcome::default()
    })
}

/// Allowed distance between χ and the trajectory estimate, in standard errors.
const MC_BAND: f64 = 3.0;

fn mc_validate(ctx: &Context) -> Result<Outcome, Failure> {
    let m = ctx.cfg.mc.as_ref().expect("validated");
    let spec = ctx.spectrum()?;
    if spec.is_zero() {
        return Err(Failure::Config("mc-validate needs a nonzero [noise] spectrum".into()));
    }
    let omega_max = m.omega_max_rad_s.unwrap_or_else(|| spec.max_frequency());
    let dt = m.dt_s.unwrap_or(0.5 * std::f64::consts::PI / omega_max);
    let traj = TrajectoryConfig::new(dt, m.n_traj, ctx.seed, omega_max)?;
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for (i, c) in m.cases.iter().enumerate() {
        let seq = PulseSequence::cp(c.n, c.tau_s)?;
        let chi = coherence_chi(&seq, &spec)?;
        let est = estimate_coherence(&seq, &spec, &traj)?;
        let dev = est.deviation(chi);
        if !(dev <= MC_BAND) {
            bad.push(format!(
                "case {i} (n = {}, tau = {} s) is {dev:.2} standard errors off",
                c.n, c.tau_s
            ));
        }
        rows.push(io::McRow {
            chi_analytic: chi,
            coherence_mc: est.coherence,
            stderr: est.stderr,
            n_traj: est.n_traj,
            seed: est.seed,
        });
    }
    io::write_rows(&ctx.out.join("mc.csv"), &rows)?;
    Ok(Outcome {
        outputs: vec!["mc.csv".into()],
        evaluations: Some(m.cases.len() * m.n_traj),
        failure: (!bad.is_empty()).then(|| bad.join("; ")),
    })
}

fn spectrum_estimate(ctx: &Context) -> Result<Outcome, Failure> {
    let s = ctx.cfg.spectrum.as_ref().expect("validated");
    let curves = io::read_decays(&ctx.path(&s.decays_path))?;
    let est = fit_spectrum_from_decays(&curves, s.components)?;
    io::write_mixture(&ctx.out.join("spectrum.csv"), est.spectrum.lines().unwrap_or(&[]))?;
    let pts: Vec<io::SpectrumPointRow> = est
        .points
        .iter()
        .map(|&(w, v)| io::SpectrumPointRow {
            omega_rad_s: w,
            value: v,
        })
        .collect();
    io::write_rows(&ctx.out.join("spectrum_points.csv"), &pts)?;
    let fits: Vec<Vec<f64>> = est.decays.iter().map(|d| vec![d.tau, d.t2, d.t2_err]).collect();
    io::write_table(
        &ctx.out.join("decay_fits.csv"),
        &["tau_s".into(), "T2_s".into(), "T2_err_s".into()],
        &fits,
    )?;
    Ok(Outcome {
        outputs: vec![
            "spectrum.csv".into(),
            "spectrum_points.csv".into(),
            "decay_fits.csv".into(),
        ],
        ..Outcome::default()
    })
}

fn calibrate(ctx: &Context) -> Result<Outcome, Failure> {
    let c = ctx.cfg.calibrate.as_ref().expect("validated");
    let measured: Vec<(f64, f64)> = io::read_rows::<io::ObservableRow>(&ctx.path(&c.measured_path))?
        .into_iter()
        .map(|r| (r.duration, r.value))
        .collect();
    let theory: Vec<(f64, f64)> = match &c.theory_path {
        Some(p) => io::read_rows::<io::TheoryRow>(&ctx.path(p))?
            .into_iter()
            .map(|r| (r.duration, r.eta))
            .collect(),
        None => {
            let field = ctx.field()?;
            let spec = ctx.spectrum()?;
            let params = ctx.params()?;
            let hi = c.t_max_s.expect("validated");
            let totals = linspace(c.t_min_s.expect("validated"), hi, c.steps.expect("validated"));
            let engine = ChiEngine::new(&spec, hi);
            sweep_t(
                &field,
                &engine,
                &SequenceFamily::Cp(c.n.expect("validated")),
                &totals,
                &params,
            )?
            .iter()
            .map(|r| (r.duration, r.eta))
            .collect()
        }
    };
    let cal = calibrate_c(&measured, &theory)?;
    io::write_table(
        &ctx.out.join("calibration.csv"),
        &[
            "C".into(),
            "C_err".into(),
            "E_max".into(),
            "E_max_err".into(),
            "T_peak_s".into(),
            "eta_min".into(),
        ],
        &[vec![
            cal.c,
            cal.c_err,
            cal.e_max,
            cal.e_max_err,
            cal.t_peak,
            cal.eta_min,
        ]],
    )?;
    let rows: Vec<Vec<f64>> = theory
        .iter()
        .map(|&(t, eta)| {
            let (e, de) = cal.predict(eta);
            vec![t, eta, e, de]
        })
        .collect();
    io::write_table(
        &ctx.out.join("prediction.csv"),
        &[
            "T_s".into(),
            "eta_uT_per_sqrtHz".into(),
            "E_pred".into(),
            "E_pred_err".into(),
        ],
        &rows,
    )?;
    Ok(Outcome {
        outputs: vec!["calibration.csv".into(), "prediction.csv".into()],
        ..Outcome::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn help_lists_commands_and_keys() {
        use clap::CommandFactory;
        let help = Args::command().render_long_help().to_string();
        for c in [
            "sweep",
            "optimize",
            "map",
            "mc-validate",
            "spectrum-estimate",
            "calibrate",
        ] {
            assert!(help.contains(c), "{c}");
        }
        for k in [
            "--config",
            "--out",
            "--seed",
            "--threads",
            "QSENSE_THREADS",
            "freqs_hz",
            "n_traj",
        ] {
            assert!(help.contains(k), "{k}");
        }
    }

    #[test]
    fn missing_config_is_exit_2() {
        assert_eq!(main_with_args(["qsense", "sweep"]), 2);
        assert_eq!(main_with_args(["qsense", "bogus"]), 2);
        assert_eq!(main_with_args(["qsense", "sweep", "--config", "/nonexistent.toml"]), 2);
    }
}
