//! Run configuration: one TOML file, overridden field by field by flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use toolsim_core::{EnvId, InstanceParams};
use toolsim_data::metaset::MetasetConfig;
use toolsim_data::sampler::SamplerConfig;
use toolsim_data::templates::MetaTaskKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Random walks over executable actions.
    Random,
    /// Planner solutions with epsilon-noise.
    Guided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetasetSection {
    /// Execution records to draw samples from; defaults to `n`.
    pub records: Option<usize>,
    pub policy: Policy,
    pub boundary_positive_ratio: f64,
    pub kinds: Vec<MetaTaskKind>,
    pub turns_min: usize,
    pub turns_max: usize,
}

impl Default for MetasetSection {
    fn default() -> Self {
        let base = MetasetConfig::default();
        Self {
            records: None,
            policy: Policy::Random,
            boundary_positive_ratio: base.boundary_positive_ratio,
            kinds: base.kinds,
            turns_min: 2,
            turns_max: 6,
        }
    }
}

impl MetasetSection {
    pub fn builder_config(&self) -> MetasetConfig {
        MetasetConfig {
            boundary_positive_ratio: self.boundary_positive_ratio,
            kinds: self.kinds.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IclSection {
    pub k_per_task: usize,
    /// Size of the metaset the demonstrations are drawn from.
    pub pool: usize,
}

impl Default for IclSection {
    fn default() -> Self {
        Self { k_per_task: 2, pool: 600 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub agent: String,
    /// Fixed step budget; unset means `max(30, 2 * plan length + 4)`.
    pub budget: Option<usize>,
    pub timeout_secs: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            agent: "oracle".into(),
            budget: None,
            timeout_secs: 60,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: Option<EnvId>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    /// Instance sizes; for `eval` the SAW default excludes length-2 targets.
    pub instance: Option<InstanceParams>,
    pub policy: Option<Policy>,
    pub sampler: SamplerConfig,
    pub metaset: MetasetSection,
    pub icl: IclSection,
    pub eval: EvalSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn env(&self) -> Result<EnvId> {
        self.env.context("no environment given; pass --env or set `env` in the config")
    }

    pub fn n(&self) -> Result<usize> {
        self.n.context("no count given; pass --n or set `n` in the config")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        let m = &self.metaset;
        if m.turns_min == 0 || m.turns_min > m.turns_max {
            bail!("metaset turns range [{}, {}] is invalid", m.turns_min, m.turns_max);
        }
        if self.eval.budget == Some(0) {
            bail!("eval budget must be at least 1");
        }
        Ok(())
    }
}

pub fn parse_env(s: &str) -> Result<EnvId, String> {
    EnvId::ALL
        .into_iter()
        .find(|e| e.as_str() == s.to_ascii_lowercase())
        .ok_or_else(|| format!("unknown environment `{s}` (expected saw, bw or log)"))
}
