use serde::{Deserialize, Serialize};

use crate::analysis::ConditionParams;
use crate::baseline::SpgConfig;
use crate::bench::SweepSpec;
use crate::dynamics::{InitSpec, SolverConfig, Stepper};
use crate::error::{Error, Result};
use crate::objective::{SearchBox, SmootherKind};

pub const SCHEMA_VERSION: u32 = 1;

/// One experiment document. Exactly the section matching the subcommand is read.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub schema_version: u32,
    pub run: Option<RunSection>,
    pub sweep: Option<SweepSpec>,
    pub compare: Option<SweepSpec>,
    pub condition: Option<ConditionSection>,
    pub decay: Option<DecaySection>,
    pub laplace: Option<LaplaceSection>,
    pub spg: Option<SpgSection>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self> {
        let doc: Document = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

fn default_smoother() -> SmootherKind {
    SmootherKind::LogExp
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub objective: String,
    #[serde(default = "default_smoother")]
    pub smoother: SmootherKind,
    #[serde(default)]
    pub stepper: Stepper,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Defaults to uniform on the objective's box.
    pub init: Option<InitSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSection {
    pub objective: String,
    pub dim: usize,
    #[serde(default = "default_smoother")]
    pub smoother: SmootherKind,
    pub params: ConditionParams,
    pub init: SearchBox,
    pub n_particles: usize,
    #[serde(default = "default_condition_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// SCBO runs under the same parameters; the smallest `f(x_inf)` is reported.
    #[serde(default)]
    pub runs: usize,
    #[serde(default = "default_condition_t_max")]
    pub t_max: f64,
}

fn default_condition_samples() -> usize {
    10_000
}

fn default_condition_t_max() -> f64 {
    SolverConfig::default().t_max
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySection {
    #[serde(default)]
    pub solver: SolverConfig,
    pub n_steps: u64,
    pub n_seeds: usize,
    #[serde(default = "default_every")]
    pub every: u64,
    /// Continuous-time probe times; skipped when empty.
    #[serde(default)]
    pub t_checkpoints: Vec<f64>,
    #[serde(default = "default_probe_samples")]
    pub probe_samples: usize,
    #[serde(default = "default_init_diff")]
    pub init_diff: f64,
}

fn default_every() -> u64 {
    10
}

fn default_probe_samples() -> usize {
    100_000
}

fn default_init_diff() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceSection {
    pub objective: String,
    pub dim: usize,
    #[serde(default = "default_smoother")]
    pub smoother: SmootherKind,
    pub betas: Vec<f64>,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to the objective's box.
    pub bounds: Option<SearchBox>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpgSection {
    pub objective: String,
    pub dim: usize,
    #[serde(default = "default_smoother")]
    pub smoother: SmootherKind,
    #[serde(default)]
    pub config: SpgConfig,
    pub n_starts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
}

fn default_threshold() -> f64 {
    0.005
}

/// A written report: the resolved configuration next to its result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact<C, R> {
    pub schema_version: u32,
    pub command: String,
    pub config: C,
    pub result: R,
}
