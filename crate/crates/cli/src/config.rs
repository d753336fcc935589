use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use qrbsde_core::catalog::{generator, space_time_fn};
use qrbsde_core::pde::PdeGrid;
use qrbsde_core::verify::{SuiteSettings, Tolerances};
use qrbsde_core::{build_lattice, Error as CoreError, MarkovModel, PdeScheme, Structure};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SolveRbsde,
    SolvePde,
    OptimalStop,
    CrossValidate,
    PropertySuite,
    Stability,
}

impl Experiment {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        serde_json::from_value(serde_json::Value::String(name.to_string())).map_err(|_| {
            CliError::config(
                "experiment",
                format!("unknown experiment `{name}` (expected solve-rbsde, solve-pde, optimal-stop, cross-validate, property-suite or stability)"),
            )
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub drift: String,
    pub sigma: String,
    /// Evaluated at `t = T`.
    pub terminal: String,
    pub obstacle: String,
    pub generator: String,
    pub horizon: f64,
    pub x0: f64,
    #[serde(default)]
    pub t0: f64,
    pub kappa_lip: f64,
    pub varpi: f64,
    pub sigma_star: f64,
    pub b0: f64,
    #[serde(default)]
    pub clamp_radius: Option<f64>,
}

fn default_structure() -> Structure {
    Structure::Trinomial
}

fn default_scheme() -> PdeScheme {
    PdeScheme::Projected
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub n_steps: usize,
    pub n_space: usize,
    pub n_time: usize,
    #[serde(default)]
    pub x_radius: Option<f64>,
    #[serde(default = "default_structure")]
    pub structure: Structure,
    #[serde(default = "default_scheme")]
    pub pde_scheme: PdeScheme,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub discretization: Discretization,
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("qrbsde-out")
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub experiment: Option<String>,
    pub output_dir: Option<PathBuf>,
}

/// A configuration that passed validation, with its resolved model.
#[derive(Debug, Clone)]
pub struct Validated {
    pub config: RunConfig,
    pub model: MarkovModel,
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config("config", format!("cannot read {}: {e}", path.display()))
        })?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::config("config", e.to_string()))?;
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if let Some(name) = &overrides.experiment {
            cfg.experiment = Experiment::parse(name)?;
        }
        if let Some(dir) = &overrides.output_dir {
            cfg.output_dir = dir.clone();
        }
        Ok(cfg)
    }

    pub fn settings(&self, tolerances: Tolerances) -> SuiteSettings {
        SuiteSettings {
            t0: self.model.t0,
            x0: self.model.x0,
            n_steps: self.discretization.n_steps,
            structure: self.discretization.structure,
            n_space: self.discretization.n_space,
            n_time: self.discretization.n_time,
            x_radius: self.discretization.x_radius,
            seed: self.seed,
            tolerances,
        }
    }

    /// Resolves every catalog id and checks every numeric range, including
    /// that the lattice and PDE grid can be built for this model.
    pub fn validate(self) -> Result<Validated, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(
                "schema_version",
                format!(
                    "unsupported version {} (current is {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        let mc = &self.model;
        let resolve = |field: &str, id: &str| {
            space_time_fn(id).map_err(|e| CliError::config(field, e.to_string()))
        };
        let drift = resolve("model.drift", &mc.drift)?;
        let sigma = resolve("model.sigma", &mc.sigma)?;
        let terminal = resolve("model.terminal", &mc.terminal)?;
        let obstacle = resolve("model.obstacle", &mc.obstacle)?;
        let g = generator(&mc.generator)
            .map_err(|e| CliError::config("model.generator", e.to_string()))?;
        for (field, v) in [
            ("model.horizon", mc.horizon),
            ("model.x0", mc.x0),
            ("model.t0", mc.t0),
        ] {
            if !v.is_finite() {
                return Err(CliError::config(field, "must be finite"));
            }
        }
        if !(mc.t0 >= 0.0 && mc.t0 < mc.horizon) {
            return Err(CliError::config(
                "model.t0",
                format!("must lie in [0, horizon) (got {})", mc.t0),
            ));
        }
        let horizon = mc.horizon;
        let mut model = MarkovModel::new(
            drift,
            sigma,
            Arc::new(move |x| terminal(horizon, x)),
            obstacle,
            g,
            mc.kappa_lip,
            mc.varpi,
            mc.sigma_star,
            mc.b0,
            mc.horizon,
        )
        .map_err(model_error)?;
        if let Some(r) = mc.clamp_radius {
            model = model.with_clamp_radius(r).map_err(model_error)?;
        }

        let d = &self.discretization;
        if d.n_steps == 0 {
            return Err(CliError::config("discretization.n_steps", "must be >= 1"));
        }
        let span = mc.horizon - mc.t0;
        let kappa = model.generator.kappa;
        if kappa * span / d.n_steps as f64 >= 1.0 {
            return Err(CliError::config(
                "discretization.n_steps",
                format!(
                    "kappa * dt = {} must be < 1",
                    kappa * span / d.n_steps as f64
                ),
            ));
        }
        if d.n_time > 0 && kappa * span / d.n_time as f64 >= 1.0 {
            return Err(CliError::config(
                "discretization.n_time",
                "kappa * dt must be < 1",
            ));
        }
        build_lattice(&model, mc.t0, mc.x0, d.n_steps, d.structure).map_err(|e| match e {
            CoreError::NonConstantVolatility { .. } => {
                CliError::config("discretization.structure", e.to_string())
            }
            other => CliError::config("discretization.n_steps", other.to_string()),
        })?;
        PdeGrid::centered(&model, mc.x0, d.x_radius, d.n_space, mc.t0, d.n_time).map_err(|e| {
            match e {
                CoreError::InvalidParameter { field, reason } => {
                    CliError::config(format!("discretization.{field}"), reason)
                }
                other => CliError::config("discretization", other.to_string()),
            }
        })?;
        let tolerances = Tolerances::from_map(&self.tolerances).map_err(|e| match e {
            CoreError::InvalidParameter { field, reason } => CliError::config(field, reason),
            other => CliError::config("tolerances", other.to_string()),
        })?;
        Ok(Validated {
            config: self,
            model,
            tolerances,
        })
    }
}

fn model_error(e: CoreError) -> CliError {
    match e {
        CoreError::InvalidParameter { field, reason } => {
            CliError::config(format!("model.{field}"), reason)
        }
        other => CliError::config("model", other.to_string()),
    }
}
