//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[scenario]`, `[params]`,
//! `[profile]`, `[grid]` and the optional `[control]`, `[moment]`, `[bound]`,
//! `[cross_check]` and `[sweep]`. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use chemoblow_core::functionals::{DiagnosticsConfig, MomentConfig};
use chemoblow_core::{
    build_grid, make_profile, validate_params, InitialProfile, ModelParams, ParamRecord, ProfileKind, RadialGrid,
    StepControl, Stretching,
};

use crate::error::{CliError, Result};

pub const DEFAULT_RATIO: f64 = 0.985;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioSection,
    pub params: ParamRecord,
    pub profile: ProfileSection,
    pub grid: GridSection,
    #[serde(default)]
    pub control: StepControl,
    #[serde(default)]
    pub moment: Option<MomentConfig>,
    #[serde(default)]
    pub bound: BoundSection,
    #[serde(default)]
    pub cross_check: CrossCheckSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Number of u(r, t) snapshots written to the profiles table.
    #[serde(default = "default_snapshots")]
    pub profile_snapshots: usize,
}

fn default_snapshots() -> usize {
    16
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub kind: ProfileKind,
    pub amplitude: f64,
    pub cap: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StretchingKind {
    Uniform,
    #[default]
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub cells: usize,
    #[serde(default)]
    pub stretching: StretchingKind,
    /// Width ratio of neighbouring cells, inner over outer.
    #[serde(default)]
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    pub sigma: Option<f64>,
    pub c_gn: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CrossCheckSection {
    pub mass_formulation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axes: Vec<Axis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub field: String,
    pub values: Vec<f64>,
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub params: ModelParams,
    pub profile: InitialProfile,
    pub grid: RadialGrid,
    pub ctrl: StepControl,
    pub diagnostics: DiagnosticsConfig,
    pub cross_check: bool,
    pub output_dir: PathBuf,
    pub profile_snapshots: usize,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Config::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Validate every section, reporting all problems at once.
    pub fn build(&self) -> Result<Scenario> {
        let mut problems = Vec::new();
        let name = &self.scenario.name;
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
            problems.push(format!("scenario.name: must be nonempty and use only [A-Za-z0-9_.-] (got {name:?})"));
        }
        let params = validate_params(&self.params)
            .map_err(|e| problems.push(format!("params: {e}")))
            .ok();
        if let Err(e) = self.control.validate() {
            problems.push(format!("control: {e}"));
        }
        let stretching = match (self.grid.stretching, self.grid.ratio) {
            (StretchingKind::Uniform, None) => Some(Stretching::Uniform),
            (StretchingKind::Uniform, Some(_)) => {
                problems.push("grid.ratio: only allowed with stretching = \"geometric\"".into());
                None
            }
            (StretchingKind::Geometric, q) => Some(Stretching::Geometric(q.unwrap_or(DEFAULT_RATIO))),
        };
        let mut built = None;
        if let (Some(params), Some(stretching)) = (params, stretching) {
            let grid = build_grid(params.dim(), params.radius, self.grid.cells, stretching)
                .map_err(|e| problems.push(format!("grid: {e}")))
                .ok();
            let p = &self.profile;
            let profile = make_profile(p.kind, p.amplitude, p.cap, p.scale, &params)
                .map_err(|e| problems.push(format!("profile: {e}")))
                .ok();
            let mut diagnostics = DiagnosticsConfig::default_for(&params);
            if let Some(m) = self.moment {
                diagnostics.moment = m;
            }
            if let Some(s) = self.bound.sigma {
                diagnostics.gn.sigma = s;
            }
            if let Some(c) = self.bound.c_gn {
                diagnostics.gn.c_gn = c;
            }
            if let Err(e) = diagnostics.moment.validate(params.dim(), params.radius) {
                problems.push(format!("moment: {e}"));
            }
            if let Err(e) = diagnostics.gn.validate(params.dim()) {
                problems.push(format!("bound: {e}"));
            }
            built = grid.zip(profile).map(|(g, pr)| (params, g, pr, diagnostics));
        }
        for axis in &self.sweep.axes {
            if !SWEEP_FIELDS.contains(&axis.field.as_str()) {
                problems.push(format!(
                    "sweep.axes: unknown field {:?}, expected one of {}",
                    axis.field,
                    SWEEP_FIELDS.join(", ")
                ));
            }
            if axis.values.is_empty() || axis.values.iter().any(|v| !v.is_finite()) {
                problems.push(format!("sweep.axes: {} needs a nonempty list of finite values", axis.field));
            }
        }
        match built {
            Some((params, grid, profile, diagnostics)) if problems.is_empty() => Ok(Scenario {
                name: name.clone(),
                params,
                profile,
                grid,
                ctrl: self.control,
                diagnostics,
                cross_check: self.cross_check.mass_formulation,
                output_dir: self.scenario.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
                profile_snapshots: self.scenario.profile_snapshots,
            }),
            _ => Err(CliError::Config(problems.join("; "))),
        }
    }
}

/// Scalar fields a sweep axis may vary. `dominance` sets `ξ = (χα − d)/γ`.
pub const SWEEP_FIELDS: [&str; 15] = [
    "lambda",
    "mu",
    "k",
    "chi",
    "xi",
    "alpha",
    "beta",
    "gamma",
    "delta",
    "radius",
    "dominance",
    "amplitude",
    "cap",
    "scale",
    "cells",
];

impl Config {
    /// Copy of `self` with one sweep field overridden.
    pub fn with_field(&self, field: &str, value: f64) -> Result<Config> {
        let mut c = self.clone();
        let p = &mut c.params;
        match field {
            "lambda" => p.lambda = value,
            "mu" => p.mu = value,
            "k" => p.k = value,
            "chi" => p.chi = value,
            "xi" => p.xi = value,
            "alpha" => p.alpha = value,
            "beta" => p.beta = value,
            "gamma" => p.gamma = value,
            "delta" => p.delta = value,
            "radius" => p.radius = value,
            "dominance" => p.xi = (p.chi * p.alpha - value) / p.gamma,
            "amplitude" => c.profile.amplitude = value,
            "cap" => c.profile.cap = value,
            "scale" => c.profile.scale = value,
            "cells" => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(CliError::Config(format!("cells must be a whole number, got {value}")));
                }
                c.grid.cells = value as usize;
            }
            other => return Err(CliError::Config(format!("unknown sweep field {other:?}"))),
        }
        Ok(c)
    }
}
