//! Versioned TOML experiment configuration.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::ModifiedEnergyParams;
use crate::dynamics::{ModelSpec, PolarState, SwarmState};
use crate::error::{Error, Result};
use crate::hydro1d::{default_cutoff, Profile};
use crate::integrator::{default_step, IntegratorSpec, Method, DEFAULT_BLOWUP_GUARD};
use crate::kernels::KernelSpec;
use crate::potentials::{classify_potential, PotentialSpec};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    At,
    Phiu,
    Cs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// Explicit per-agent rows.
    Table { x: Vec<Vec<f64>>, v: Vec<Vec<f64>> },
    /// Coordinates uniform in `[-radius, radius]^d`, velocities uniform in `[-speed, speed]^d`.
    Random {
        n: usize,
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        radius: f64,
        speed: f64,
        /// Shift to the zero-momentum frame.
        #[serde(default = "yes")]
        center: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSection {
    #[serde(default)]
    pub method: Method,
    /// Step size; defaults to `1e-2 min(1, 1/sqrt(A))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    pub t_end: f64,
    #[serde(default = "one")]
    pub sample_stride: usize,
    #[serde(default = "guard")]
    pub blowup_guard: f64,
    #[serde(default)]
    pub comoving: bool,
}

fn one() -> usize {
    1
}

fn guard() -> f64 {
    DEFAULT_BLOWUP_GUARD
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSeries {
    De,
    #[default]
    DCalE,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modified_energy: Option<ModifiedEnergyParams>,
    #[serde(default = "default_window")]
    pub fit_window: [f64; 2],
    #[serde(default)]
    pub fit_series: FitSeries,
    #[serde(default = "yes")]
    pub envelopes: bool,
    #[serde(default = "yes")]
    pub checks: bool,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            modified_energy: None,
            fit_window: default_window(),
            fit_series: FitSeries::default(),
            envelopes: true,
            checks: true,
        }
    }
}

fn default_window() -> [f64; 2] {
    [10.0, 500.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_summary")]
    pub summary: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { csv: default_csv(), summary: default_summary() }
    }
}

fn default_csv() -> String {
    "diagnostics.csv".into()
}

fn default_summary() -> String {
    "summary.json".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarSection {
    pub tau: f64,
    pub initial: PolarState,
    /// Fit window in time, log-spaced sampling inside it.
    #[serde(default = "polar_window")]
    pub fit_window: [f64; 2],
    #[serde(default = "per_decade")]
    pub samples_per_decade: usize,
}

fn polar_window() -> [f64; 2] {
    [1e2, 1e4]
}

fn per_decade() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroSection {
    pub tau: f64,
    pub particles: usize,
    /// Rescale the discretized mass to this total.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    #[serde(default = "default_cutoff")]
    pub blowup_cutoff: f64,
    pub profile: Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifySection {
    pub r_max: f64,
    #[serde(default = "classify_samples")]
    pub n_samples: usize,
}

fn classify_samples() -> usize {
    1001
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepCommand {
    Simulate,
    Polar,
    Hydro1d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    /// Dotted path into the configuration, e.g. `potential.beta`.
    pub key: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSection {
    pub command: SweepCommand,
    pub axes: Vec<SweepAxis>,
}

/// Complete experiment description; each command reads the sections it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialCondition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polar: Option<PolarSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hydro: Option<HydroSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classify: Option<ClassifySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

fn missing(section: &str) -> Error {
    Error::Config(format!("missing [{section}] section"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {}, expected {CONFIG_VERSION}",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_value(value: toml::Value) -> Result<Self> {
        let text = toml::to_string(&value).map_err(|e| Error::Config(e.to_string()))?;
        Self::parse(&text)
    }

    /// Replaces the seed of a random initial condition.
    pub fn override_seed(&mut self, seed: u64) {
        if let Some(InitialCondition::Random { seed: s, .. }) = &mut self.initial {
            *s = Some(seed);
        }
    }

    pub fn potential(&self) -> Result<&PotentialSpec> {
        self.potential.as_ref().ok_or_else(|| missing("potential"))
    }

    /// Builds and validates the model, enforcing which sections each model admits.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let section = self.model.ok_or_else(|| missing("model"))?;
        let tau = section.tau;
        let model = match section.kind {
            ModelKind::At => {
                if self.kernel.is_some() {
                    return Err(Error::Config("the at model takes no [kernel]".into()));
                }
                ModelSpec::At { potential: self.potential()?.clone(), tau }
            }
            ModelKind::Phiu => ModelSpec::PhiU {
                potential: self.potential()?.clone(),
                kernel: self.kernel.clone().ok_or_else(|| missing("kernel"))?,
                tau,
            },
            ModelKind::Cs => {
                if self.potential.is_some() {
                    return Err(Error::Config("the cs model takes no [potential]".into()));
                }
                ModelSpec::Cs { kernel: self.kernel.clone().ok_or_else(|| missing("kernel"))?, tau }
            }
        };
        model.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(model)
    }

    pub fn initial_state(&self) -> Result<SwarmState> {
        match self.initial.as_ref().ok_or_else(|| missing("initial"))? {
            InitialCondition::Table { x, v } => {
                SwarmState::from_rows(0.0, x, v).map_err(|e| Error::Config(format!("initial table: {e}")))
            }
            InitialCondition::Random { n, d, seed, radius, speed, center } => {
                let seed = seed.ok_or_else(|| Error::Config("random initial condition needs a seed".into()))?;
                if *n == 0 || *d == 0 || !(*radius >= 0.0) || !(*speed >= 0.0) {
                    return Err(Error::Config("random initial condition needs n, d >= 1 and non-negative scales".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut draw = |scale: f64| -> Vec<f64> {
                    (0..n * d).map(|_| if scale > 0.0 { rng.gen_range(-scale..scale) } else { 0.0 }).collect()
                };
                let x = draw(*radius);
                let v = draw(*speed);
                let s = SwarmState::new(0.0, *n, *d, x, v)?;
                Ok(if *center { s.centered() } else { s })
            }
        }
    }

    /// Integrator settings; the default step uses the Hessian bound of the
    /// potential sampled over the initial spread.
    pub fn integrator_spec(&self, scale_hint: f64) -> Result<IntegratorSpec> {
        let sec = self.integrator.ok_or_else(|| missing("integrator"))?;
        let h = match sec.h {
            Some(h) => h,
            None => match &self.potential {
                Some(p) => default_step(classify_potential(p, scale_hint.max(1.0), 1001)?.bounded.constant),
                None => default_step(1.0),
            },
        };
        let spec = IntegratorSpec {
            method: sec.method,
            h,
            t_end: sec.t_end,
            sample_stride: sec.sample_stride,
            blowup_guard: sec.blowup_guard,
            comoving: sec.comoving,
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }

    /// Warnings for runs outside the parameter ranges covered by the decay theorems.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let Some(model) = self.model else { return out };
        let beta = self.potential.as_ref().map_or(0.0, PotentialSpec::fat_tail_exponent);
        let gamma = match &self.kernel {
            Some(KernelSpec::ScalarFatTail { gamma, .. }) => *gamma,
            _ => beta,
        };
        match model.kind {
            ModelKind::Phiu if 3.0 * beta + 2.0 * beta.max(gamma) >= 4.0 => out.push(format!(
                "3 beta + 2 max(beta, gamma) = {} >= 4: outside the proven decay range",
                3.0 * beta + 2.0 * beta.max(gamma)
            )),
            ModelKind::At if beta >= 1.0 / 3.0 => {
                out.push(format!("beta = {beta} >= 1/3: outside the proven anticipated-energy decay range"))
            }
            _ => {}
        }
        out
    }
}
