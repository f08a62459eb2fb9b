use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::SimulationRun;
use crate::error::{Error, Result};
use crate::harness::{BlowupSpec, ConvergenceSpec, DensitySpec, TimingSpec};
use crate::models::BundledModel;

/// Contents of a `--config` file. Every section is optional and unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: BundledModel,
    /// Seed applied to every section; `--seed` takes precedence.
    pub seed: Option<u64>,
    pub simulate: SimulationRun,
    pub converge: ConvergenceSpec,
    pub blowup: BlowupSpec,
    pub timing: TimingSpec,
    pub density: DensitySpec,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Push the top-level seed down into each section.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.simulate.master_seed = seed;
        self.converge.seed_base = seed;
        self.blowup.seed_base = seed;
        self.timing.seed = seed;
        self.density.seed = seed;
    }

    /// The configuration with defaults and seed overrides resolved.
    pub fn effective(mut self, seed_override: Option<u64>) -> Self {
        if let Some(seed) = seed_override.or(self.seed) {
            self.apply_seed(seed);
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
