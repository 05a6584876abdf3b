//! Batch experiment runner behind the `anticipation` binary.
//!
//! Every command reads an [`ExperimentConfig`], writes its outputs into a
//! directory and returns an [`Outcome`] carrying the process exit code and a
//! JSON summary. Outputs are deterministic: no timestamps, fixed key order.

pub mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

pub use config::*;

use crate::diagnostics::{
    check_means_inequality, diagnostics_row, energy_enstrophy_residual, fit_subexp_exponent, linear_fit,
    max_increase, momentum_drift, spread_envelopes, DiagnosticsRow, CSV_HEADER,
};
use crate::dynamics::{polar_rhs, ModelSpec, PolarState, SwarmState};
use crate::error::{Error, Result};
use crate::hydro1d::{run_threshold_experiment, ThresholdSettings};
use crate::integrator::{integrate, run_flat, OdeSystem};
use crate::kernels::KernelSpec;
use crate::potentials::{bracket, classify_potential, PotentialSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_BLOWUP: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Exit code for an error that aborted a command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Input(_) | Error::Io(_) | Error::Contract(_) => EXIT_CONFIG,
        Error::Numerical { .. } | Error::Extrapolation { .. } | Error::Spec { .. } | Error::Domain(_) | Error::Fit(_) => {
            EXIT_NUMERICAL
        }
    }
}

/// Command-line overrides shared by all commands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub quiet: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub summary: Value,
}

fn note(opts: &RunOptions, msg: &str) {
    if !opts.quiet {
        eprintln!("{msg}");
    }
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn csv_writer(path: &Path, header: &str) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{header}")?;
    Ok(w)
}

fn fit_json<T: Serialize>(fit: Result<T>) -> Value {
    match fit {
        Ok(f) => serde_json::to_value(f).unwrap_or(Value::Null),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn check(value: f64, tolerance: f64) -> Value {
    json!({ "value": value, "tolerance": tolerance, "pass": value <= tolerance })
}

/// Predicted sub-exponential exponent `1 - lambda` of the fitted energy fluctuation.
pub fn predicted_slope(model: &ModelSpec) -> Option<f64> {
    match model {
        ModelSpec::At { potential, .. } => {
            let b = potential.fat_tail_exponent();
            (b < 1.0).then(|| 1.0 - 2.0 * b / (1.0 - b))
        }
        ModelSpec::PhiU { potential, kernel, .. } => {
            let b = potential.fat_tail_exponent();
            let g = match kernel {
                KernelSpec::ScalarFatTail { gamma, .. } => *gamma,
                KernelSpec::ConstantScalar { .. } => 0.0,
                KernelSpec::HessianOfPotential { .. } => b,
            };
            Some(1.0 - 2.0 * b.max(g) / (4.0 - 3.0 * b))
        }
        ModelSpec::Cs { .. } => None,
    }
}

fn initial_scale(state: &SwarmState, tau: f64) -> f64 {
    let mx = state.x.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mv = state.v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    2.0 * (mx + tau * mv) * (state.dim() as f64).sqrt() + 1.0
}

/// Integrates the swarm and writes the diagnostics CSV and summary.
pub fn cmd_simulate(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.override_seed(seed);
    }
    let model = cfg.model_spec()?;
    let state0 = cfg.initial_state()?;
    let spec = cfg.integrator_spec(initial_scale(&state0, model.tau()))?;
    let warnings = cfg.warnings();
    warnings.iter().for_each(|w| note(opts, &format!("warning: {w}")));
    create_out(&opts.out)?;

    let modified = cfg.diagnostics.modified_energy;
    let mut csv = csv_writer(&opts.out.join(&cfg.output.csv), CSV_HEADER)?;
    let mut rows: Vec<DiagnosticsRow> = Vec::new();
    let mut observer = |s: &SwarmState| -> Result<()> {
        let row = diagnostics_row(s, &model, modified.as_ref())?;
        writeln!(csv, "{}", row.csv_line())?;
        rows.push(row);
        Ok(())
    };
    let outcome = integrate(&model, &state0, &spec, &mut observer)?;
    csv.flush()?;

    let window = (cfg.diagnostics.fit_window[0], cfg.diagnostics.fit_window[1]);
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let series: Vec<f64> = rows
        .iter()
        .map(|r| match cfg.diagnostics.fit_series {
            FitSeries::De => r.de,
            FitSeries::DCalE => r.d_cal_e,
        })
        .collect();
    let fit = fit_json(fit_subexp_exponent(&t, &series, window));
    let beta = model.potential().map(PotentialSpec::fat_tail_exponent);
    let envelopes = match beta {
        Some(b) if cfg.diagnostics.envelopes && !rows.is_empty() => fit_json(spread_envelopes(&rows, b)),
        _ => Value::Null,
    };

    let checks = if cfg.diagnostics.checks && !rows.is_empty() {
        let (dv, dx) = momentum_drift(&rows);
        let vscale = 1.0 + state0.v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let xscale = 1.0 + state0.x.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut c = json!({
            "mean_velocity_drift": check(dv, 1e-10 * vscale),
            "mean_position_drift": check(dx, 1e-8 * xscale),
        });
        let cal_e0 = rows[0].cal_e;
        match &model {
            ModelSpec::At { .. } => {
                let change = rows.iter().map(|r| (cal_e0 - r.cal_e).abs()).fold(0.0, f64::max);
                c["energy_enstrophy_residual"] = check(energy_enstrophy_residual(&rows), 1e-6 * change);
                c["anticipated_fluctuation_increase"] = check(max_increase(&rows, |r| r.d_cal_e), 1e-9 * (1.0 + cal_e0));
            }
            ModelSpec::PhiU { kernel, .. } | ModelSpec::Cs { kernel, .. } => {
                // dissipation is guaranteed only for a positive scalar weight
                if kernel.bounds().is_some() {
                    c["energy_fluctuation_increase"] = check(max_increase(&rows, |r| r.de), 1e-9 * (1.0 + rows[0].e));
                }
            }
        }
        c
    } else {
        Value::Null
    };

    let exit_code = if outcome.blowup.is_some() { EXIT_BLOWUP } else { EXIT_OK };
    let seed = match &cfg.initial {
        Some(InitialCondition::Random { seed, .. }) => json!(seed),
        _ => Value::Null,
    };
    let summary = json!({
        "command": "simulate",
        "exit_code": exit_code,
        "seed": seed,
        "n": state0.n(),
        "d": state0.dim(),
        "tau": model.tau(),
        "h": spec.h,
        "t_end": spec.t_end,
        "steps": outcome.steps,
        "samples": rows.len(),
        "blowup": outcome.blowup,
        "warnings": warnings,
        "fit": { "series": cfg.diagnostics.fit_series, "window": cfg.diagnostics.fit_window, "result": fit },
        "predicted_slope": predicted_slope(&model),
        "envelopes": envelopes,
        "checks": checks,
    });
    write_json(&opts.out.join(&cfg.output.summary), &summary)?;
    match outcome.blowup {
        Some(b) => note(opts, &format!("blow-up at t = {} (step {}, agent {})", b.t, b.step, b.agent)),
        None => note(opts, &format!("simulate: {} steps, {} rows", outcome.steps, rows.len())),
    }
    Ok(Outcome { exit_code, summary })
}

struct PolarSystem<'a> {
    potential: &'a PotentialSpec,
    tau: f64,
}

impl OdeSystem for PolarSystem<'_> {
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let d = polar_rhs(&PolarState::from_array([y[0], y[1], y[2], y[3]]), self.potential, self.tau)?;
        dy.copy_from_slice(&d.to_array());
        Ok(())
    }
}

/// Radius where the pair potential attains its minimum.
fn equilibrium_radius(potential: &PotentialSpec) -> Result<f64> {
    match potential {
        PotentialSpec::RepulsiveAttractive { r0, .. } => Ok(*r0),
        _ => Err(Error::Config("polar runs need a potential with a nonzero equilibrium radius (repulsive_attractive)".into())),
    }
}

/// Indices of samples nearest to a log-spaced grid over `window`.
fn log_spaced(t: &[f64], window: (f64, f64), per_decade: usize) -> Vec<usize> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) || t.is_empty() {
        return Vec::new();
    }
    let m = (((hi / lo).log10() * per_decade as f64).ceil() as usize).max(1) + 1;
    let mut idx: Vec<usize> = (0..m)
        .map(|k| lo * (hi / lo).powf(k as f64 / (m - 1) as f64))
        .filter_map(|target| {
            let i = t.partition_point(|s| *s < target);
            let best = [i.saturating_sub(1), i.min(t.len() - 1)]
                .into_iter()
                .min_by(|a, b| (t[*a] - target).abs().total_cmp(&(t[*b] - target).abs()))?;
            (t[best] >= lo && t[best] <= hi).then_some(best)
        })
        .collect();
    idx.dedup();
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub power: f64,
    pub stderr: f64,
    pub samples: usize,
}

fn power_fit(t: &[f64], y: &[f64], idx: &[usize]) -> Result<PowerFit> {
    if idx.len() < 8 {
        return Err(Error::Fit(format!("only {} samples in window, need 8", idx.len())));
    }
    if let Some(&i) = idx.iter().find(|&&i| !(y[i].abs() > 0.0)) {
        return Err(Error::Fit(format!("series vanishes at t = {}", t[i])));
    }
    let xs: Vec<f64> = idx.iter().map(|&i| t[i].ln()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| y[i].abs().ln()).collect();
    let (power, _, stderr) = linear_fit(&xs, &ys)?;
    Ok(PowerFit { power, stderr, samples: idx.len() })
}

/// `<t>^{-1} ln^{1/2} <1+t>`.
pub fn kr_envelope(t: f64) -> f64 {
    bracket(1.0 + t).ln().sqrt() / bracket(t)
}

/// Integrates the two-agent polar system; writes `(t, kr, vr, vtheta)` and power fits.
pub fn cmd_polar(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let sec = cfg.polar.as_ref().ok_or_else(|| Error::Config("missing [polar] section".into()))?;
    let potential = cfg.potential()?;
    potential.validate().map_err(|e| Error::Config(e.to_string()))?;
    let r_eq = equilibrium_radius(potential)?;
    let spec = cfg.integrator_spec(2.0 * sec.initial.r + 1.0)?;
    create_out(&opts.out)?;

    let mut csv = csv_writer(&opts.out.join(&cfg.output.csv), "t,kr,vr,vtheta")?;
    let (mut t, mut kr, mut vth) = (Vec::new(), Vec::new(), Vec::new());
    let sys = PolarSystem { potential, tau: sec.tau };
    let out = run_flat(
        &sys,
        0.0,
        sec.initial.to_array().to_vec(),
        &spec,
        |ti, y| {
            writeln!(csv, "{ti:.16e},{:.16e},{:.16e},{:.16e}", y[0] - r_eq, y[2], y[3])?;
            t.push(ti);
            kr.push(y[0] - r_eq);
            vth.push(y[3]);
            Ok(())
        },
        |_, y| y.iter().position(|c| !c.is_finite() || c.abs() > spec.blowup_guard),
    )?;
    csv.flush()?;

    let window = (sec.fit_window[0], sec.fit_window[1]);
    let idx = log_spaced(&t, window, sec.samples_per_decade);
    let vtheta_fit = fit_json(power_fit(&t, &vth, &idx));
    let kr_fit = fit_json(power_fit(&t, &kr, &idx));
    // calibrate on the first half of the window in log time, count later excesses
    let t_mid = (window.0 * window.1).sqrt();
    let ratio = |i: usize| kr[i].abs() / kr_envelope(t[i]);
    let c_cal = idx.iter().filter(|&&i| t[i] <= t_mid).map(|&i| ratio(i)).fold(0.0, f64::max);
    let violations: Vec<f64> =
        idx.iter().filter(|&&i| t[i] > t_mid && ratio(i) > c_cal * (1.0 + 1e-9)).map(|&i| t[i]).collect();
    let c_inf = (0..t.len()).filter(|&i| t[i] > 0.0).map(ratio).fold(0.0, f64::max);

    let exit_code = if out.blowup.is_some() { EXIT_BLOWUP } else { EXIT_OK };
    let summary = json!({
        "command": "polar",
        "exit_code": exit_code,
        "tau": sec.tau,
        "r_eq": r_eq,
        "h": spec.h,
        "t_end": spec.t_end,
        "steps": out.steps,
        "samples": t.len(),
        "blowup": out.blowup,
        "fit_window": sec.fit_window,
        "vtheta_power": vtheta_fit,
        "kr_power": kr_fit,
        "kr_envelope": { "c_calibrated": c_cal, "c_inf": c_inf, "violations": violations },
    });
    write_json(&opts.out.join(&cfg.output.summary), &summary)?;
    note(opts, &format!("polar: {} steps, {} rows", out.steps, t.len()));
    Ok(Outcome { exit_code, summary })
}

/// Runs the one-dimensional critical-threshold experiment.
pub fn cmd_hydro1d(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let sec = cfg.hydro.as_ref().ok_or_else(|| Error::Config("missing [hydro] section".into()))?;
    let potential = cfg.potential()?;
    potential.validate().map_err(|e| Error::Config(e.to_string()))?;
    let initial = sec.profile.discretize(sec.particles, sec.m0).map_err(|e| Error::Config(e.to_string()))?;
    let span = sec.profile.x[sec.profile.x.len() - 1] - sec.profile.x[0];
    let settings = ThresholdSettings {
        tau: sec.tau,
        integrator: cfg.integrator_spec(2.0 * span + 1.0)?,
        blowup_cutoff: sec.blowup_cutoff,
    };
    create_out(&opts.out)?;
    let outcome = run_threshold_experiment(potential, &initial, &settings)?;

    let mut csv = csv_writer(&opts.out.join(&cfg.output.csv), "t,min_d,max_abs_d,mass,momentum")?;
    for s in &outcome.history {
        writeln!(csv, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", s.t, s.min_d, s.max_abs_d, s.mass, s.momentum)?;
    }
    csv.flush()?;

    let exit_code = if outcome.blew_up { EXIT_BLOWUP } else { EXIT_OK };
    let mut summary = serde_json::to_value(&outcome).map_err(|e| Error::Io(e.to_string()))?;
    if let Value::Object(map) = &mut summary {
        map.remove("history");
        map.insert("command".into(), json!("hydro1d"));
        map.insert("exit_code".into(), json!(exit_code));
        map.insert("tau".into(), json!(sec.tau));
        map.insert("particles".into(), json!(sec.particles));
        map.insert("samples".into(), json!(outcome.history.len()));
    }
    write_json(&opts.out.join(&cfg.output.summary), &summary)?;
    note(
        opts,
        &match outcome.t_blowup {
            Some(t) => format!("hydro1d: slope blow-up at t = {t}"),
            None => format!("hydro1d: no blow-up, min slope {}", outcome.min_slope),
        },
    );
    Ok(Outcome { exit_code, summary })
}

/// Certifies the structural classes of the configured potential.
pub fn cmd_classify(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let potential = cfg.potential()?;
    let sec = cfg.classify.ok_or_else(|| Error::Config("missing [classify] section".into()))?;
    let report = classify_potential(potential, sec.r_max, sec.n_samples).map_err(|e| match e {
        Error::Input(m) => Error::Config(m),
        other => other,
    })?;
    let summary = json!({ "command": "classify-potential", "exit_code": EXIT_OK, "report": report });
    create_out(&opts.out)?;
    write_json(&opts.out.join(&cfg.output.summary), &summary)?;
    if !opts.quiet {
        println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
    }
    Ok(Outcome { exit_code: EXIT_OK, summary })
}

/// Parameters of the randomized means-inequality campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeansOptions {
    pub seed: u64,
    pub instances: usize,
    pub n_max: usize,
    pub d_max: usize,
    /// `lam` is drawn from `(0, lam_max]`.
    pub lam_max: f64,
    /// `Lam` is drawn from `[lam, cap_max]`.
    pub cap_max: f64,
}

impl Default for MeansOptions {
    fn default() -> Self {
        MeansOptions { seed: 0, instances: 1000, n_max: 12, d_max: 3, lam_max: 1.0, cap_max: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeansFailure {
    pub instance: usize,
    pub n: usize,
    pub d: usize,
    pub lam: f64,
    pub cap: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub c_explicit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeansReport {
    pub options: MeansOptions,
    pub violations: usize,
    /// Largest `(lhs / rhs) / C_explicit` observed.
    pub worst_ratio: f64,
    pub worst_instance: usize,
    pub failures: Vec<MeansFailure>,
}

/// Checks the means inequality on random instances drawn from one seeded generator.
pub fn run_means_check(o: &MeansOptions) -> Result<MeansReport> {
    if o.instances == 0 || o.n_max == 0 || o.d_max == 0 {
        return Err(Error::Config("instances, n_max and d_max must be >= 1".into()));
    }
    if !(o.lam_max > 0.0 && o.cap_max >= o.lam_max && o.cap_max.is_finite()) {
        return Err(Error::Config(format!("need 0 < lam_max <= cap_max, got {}, {}", o.lam_max, o.cap_max)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut report =
        MeansReport { options: *o, violations: 0, worst_ratio: 0.0, worst_instance: 0, failures: Vec::new() };
    for instance in 0..o.instances {
        let n = rng.gen_range(1..=o.n_max);
        let d = rng.gen_range(1..=o.d_max);
        let lam = o.lam_max * (1.0 - rng.gen::<f64>());
        let cap = lam + (o.cap_max - lam) * rng.gen::<f64>();
        let z: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..n * n).map(|_| lam + (cap - lam) * rng.gen::<f64>()).collect();
        let r = check_means_inequality(&z, n, d, &c, lam, cap)?;
        let scaled = r.ratio / r.c_explicit;
        if scaled > report.worst_ratio {
            report.worst_ratio = scaled;
            report.worst_instance = instance;
        }
        if !r.pass {
            report.violations += 1;
            report.failures.push(MeansFailure { instance, n, d, lam, cap, lhs: r.lhs, rhs: r.rhs, c_explicit: r.c_explicit });
        }
    }
    Ok(report)
}

pub fn cmd_means_check(means: &MeansOptions, opts: &RunOptions) -> Result<Outcome> {
    let report = run_means_check(means)?;
    let exit_code = if report.violations == 0 { EXIT_OK } else { EXIT_NUMERICAL };
    let mut summary = serde_json::to_value(&report).map_err(|e| Error::Io(e.to_string()))?;
    summary["command"] = json!("means-check");
    summary["exit_code"] = json!(exit_code);
    summary["pass"] = json!(report.violations == 0);
    create_out(&opts.out)?;
    write_json(&opts.out.join("means_check.json"), &summary)?;
    note(
        opts,
        &format!(
            "means-check: {} instances, {} violations, worst ratio / C = {:.6}",
            means.instances, report.violations, report.worst_ratio
        ),
    );
    Ok(Outcome { exit_code, summary })
}

fn set_dotted(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| Error::Config(format!("sweep key {key}: {part} is not inside a table")))?;
        if i + 1 == parts.len() {
            table.insert((*part).to_string(), value);
            return Ok(());
        }
        node = table.entry(*part).or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Err(Error::Config("empty sweep key".into()))
}

/// Runs one configured command; used by sweep cells.
pub fn run_command(command: SweepCommand, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    match command {
        SweepCommand::Simulate => cmd_simulate(cfg, opts),
        SweepCommand::Polar => cmd_polar(cfg, opts),
        SweepCommand::Hydro1d => cmd_hydro1d(cfg, opts),
    }
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.replace([',', '\n'], ";"),
        other => other.to_string(),
    }
}

/// Runs the cartesian grid of `[sweep]` overrides, one output directory per cell.
pub fn cmd_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let sweep = cfg.sweep.clone().ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
    if sweep.axes.iter().any(|a| a.values.is_empty()) {
        return Err(Error::Config("every sweep axis needs at least one value".into()));
    }
    let mut template = cfg.clone();
    template.sweep = None;
    if let Some(seed) = opts.seed {
        template.override_seed(seed);
    }
    let base = toml::Value::try_from(&template).map_err(|e| Error::Config(e.to_string()))?;

    let mut cells: Vec<Vec<toml::Value>> = vec![Vec::new()];
    for axis in &sweep.axes {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(v.clone());
                    c
                })
            })
            .collect();
    }
    // resolve every cell before running anything so bad keys fail the whole sweep
    let configs: Vec<ExperimentConfig> = cells
        .iter()
        .map(|values| {
            let mut v = base.clone();
            for (axis, value) in sweep.axes.iter().zip(values) {
                set_dotted(&mut v, &axis.key, value.clone())?;
            }
            ExperimentConfig::from_value(v)
        })
        .collect::<Result<_>>()?;
    create_out(&opts.out)?;

    let results: Vec<Value> = configs
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let cell_opts = RunOptions { out: opts.out.join(format!("cell_{i:04}")), seed: None, quiet: true };
            match run_command(sweep.command, c, &cell_opts) {
                Ok(o) => o.summary,
                Err(e) => {
                    let v = json!({ "exit_code": exit_code(&e), "error": e.to_string() });
                    let _ = create_out(&cell_opts.out).and_then(|_| write_json(&cell_opts.out.join(&c.output.summary), &v));
                    v
                }
            }
        })
        .collect();

    let keys: Vec<&str> = sweep.axes.iter().map(|a| a.key.as_str()).collect();
    let mut header = vec!["cell".to_string()];
    header.extend(keys.iter().map(|k| k.to_string()));
    header.extend(
        ["exit_code", "fit_slope", "fit_stderr", "predicted_slope", "vtheta_power", "blew_up", "t_blowup", "error"]
            .map(String::from),
    );
    let mut csv = csv_writer(&opts.out.join("sweep.csv"), &header.join(","))?;
    let mut worst = EXIT_OK;
    for (i, (values, s)) in cells.iter().zip(&results).enumerate() {
        let mut fields = vec![i.to_string()];
        fields.extend(values.iter().map(|v| v.to_string().replace(',', ";")));
        let blew_up = match (s.get("blew_up"), s.get("blowup")) {
            (Some(b), _) => b.clone(),
            (None, Some(b)) => json!(!b.is_null()),
            _ => Value::Null,
        };
        let t_blowup = s.get("t_blowup").cloned().or_else(|| s.pointer("/blowup/t").cloned()).unwrap_or(Value::Null);
        for v in [
            s.get("exit_code").cloned().unwrap_or(Value::Null),
            s.pointer("/fit/result/slope").cloned().unwrap_or(Value::Null),
            s.pointer("/fit/result/stderr").cloned().unwrap_or(Value::Null),
            s.get("predicted_slope").cloned().unwrap_or(Value::Null),
            s.pointer("/vtheta_power/power").cloned().unwrap_or(Value::Null),
            blew_up,
            t_blowup,
            s.get("error").or_else(|| s.pointer("/fit/result/error")).cloned().unwrap_or(Value::Null),
        ] {
            fields.push(csv_field(&v));
        }
        writeln!(csv, "{}", fields.join(","))?;
        let code = s.get("exit_code").and_then(Value::as_i64).unwrap_or(0) as i32;
        if code == EXIT_CONFIG || code == EXIT_NUMERICAL {
            worst = worst.max(code);
        }
    }
    csv.flush()?;
    let summary = json!({ "command": "sweep", "exit_code": EXIT_OK, "cells": results.len(), "axes": keys, "worst_cell_exit": worst });
    write_json(&opts.out.join("sweep.json"), &summary)?;
    note(opts, &format!("sweep: {} cells", results.len()));
    Ok(Outcome { exit_code: EXIT_OK, summary })
}
