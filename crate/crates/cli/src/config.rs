//! Declarative run configuration.
//!
//! One JSON document drives every command. Unknown keys are rejected at
//! every level, and `schema` must equal [`SCHEMA_VERSION`].

use std::path::{Path, PathBuf};

use cattaneo_core::audit::{AuditConfig, Tolerances};
use cattaneo_core::material::{preset_by_name, PresetMaterial, PresetParams};
use cattaneo_core::{FdScheme, Scenario};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    pub material: MaterialConfig,
    /// The single source of randomness; `--seed` overrides it.
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` overrides it.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub audit: Option<AuditBlock>,
    #[serde(default)]
    pub simulate: Option<Scenario>,
    #[serde(default)]
    pub compare: Option<CompareBlock>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub preset: String,
    #[serde(default)]
    pub params: PresetParams,
}

impl MaterialConfig {
    pub fn build(&self) -> Result<PresetMaterial, CliError> {
        preset_by_name(&self.preset, &self.params).map_err(|e| CliError::Config(format!("material: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditBlock {
    pub samples: usize,
    pub dissipation_samples: usize,
    pub rotations: usize,
    pub scheme: FdScheme,
    pub tolerances: Tolerances,
    /// Also audit the Fourier limit of the material.
    pub fourier: bool,
}

impl Default for AuditBlock {
    fn default() -> Self {
        let d = AuditConfig::default();
        AuditBlock {
            samples: d.samples,
            dissipation_samples: d.dissipation_samples,
            rotations: d.rotations,
            scheme: d.scheme,
            tolerances: d.tolerances,
            fourier: false,
        }
    }
}

impl AuditBlock {
    pub fn to_audit_config(&self, seed: u64) -> AuditConfig {
        AuditConfig {
            samples: self.samples,
            dissipation_samples: self.dissipation_samples,
            seed,
            scheme: self.scheme,
            tolerances: self.tolerances,
            rotations: self.rotations,
        }
    }
}

/// Cattaneo runs with `τ` scaled by each factor, against one Fourier run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareBlock {
    pub tau_factors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// Scenarios run concurrently; 1 keeps everything on the calling thread.
    #[serde(default = "one")]
    pub jobs: usize,
}

fn one() -> usize {
    1
}

/// Scalars a sweep may vary: material constants or scenario knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Lambda,
    Mu,
    CV,
    ThetaRef,
    Chi,
    Beta,
    Kappa,
    Tau,
    RhoR,
    Skew,
    Coupling,
    Cfl,
    TEnd,
    FrontLevel,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Lambda => "lambda",
            SweepParameter::Mu => "mu",
            SweepParameter::CV => "c_v",
            SweepParameter::ThetaRef => "theta_ref",
            SweepParameter::Chi => "chi",
            SweepParameter::Beta => "beta",
            SweepParameter::Kappa => "kappa",
            SweepParameter::Tau => "tau",
            SweepParameter::RhoR => "rho_r",
            SweepParameter::Skew => "skew",
            SweepParameter::Coupling => "coupling",
            SweepParameter::Cfl => "cfl",
            SweepParameter::TEnd => "t_end",
            SweepParameter::FrontLevel => "front_level",
        }
    }

    /// Copies of the material and scenario with this parameter set to `value`.
    pub fn apply(self, material: &MaterialConfig, scenario: &Scenario, value: f64) -> (MaterialConfig, Scenario) {
        let mut m = material.clone();
        let mut s = scenario.clone();
        let p = &mut m.params;
        match self {
            SweepParameter::Lambda => p.lambda = Some(value),
            SweepParameter::Mu => p.mu = Some(value),
            SweepParameter::CV => p.c_v = Some(value),
            SweepParameter::ThetaRef => p.theta_ref = Some(value),
            SweepParameter::Chi => p.chi = Some(value),
            SweepParameter::Beta => p.beta = Some(value),
            SweepParameter::Kappa => p.kappa = Some(value),
            SweepParameter::Tau => p.tau = Some(value),
            SweepParameter::RhoR => p.rho_r = Some(value),
            SweepParameter::Skew => p.skew = Some(value),
            SweepParameter::Coupling => p.coupling = Some(value),
            SweepParameter::Cfl => s.cfl = value,
            SweepParameter::TEnd => s.t_end = value,
            SweepParameter::FrontLevel => s.front_level = value,
        }
        (m, s)
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema {}; this build reads schema {SCHEMA_VERSION}",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn audit_block(&self) -> AuditBlock {
        self.audit.unwrap_or_default()
    }

    pub fn scenario(&self, command: &str) -> Result<&Scenario, CliError> {
        self.simulate
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("`{command}` needs a `simulate` block")))
    }
}
