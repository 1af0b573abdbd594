//! The run configuration file. Every section is optional; flags override
//! the file, and the file overrides the defaults below.

use std::path::{Path, PathBuf};

use fingerloc::dataset::SynthSpec;
use fingerloc::{
    Algorithm, AugmentationPolicy, ModelKind, ModelOptions, OptimizerConfig, Protocol, ResidualRule, SearchSpace,
    Strategy, TrainConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// File names looked up under `FINGERLOC_DATA_DIR` when no path is given.
pub const LABELLED_FILE: &str = "iBeacon_RSSI_Labeled.csv";
pub const UNLABELLED_FILE: &str = "iBeacon_RSSI_Unlabeled.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Root of every derived seed.
    pub seed: u64,
    pub jobs: usize,
    pub data: DataPaths,
    pub split_ratio: f64,
    pub model: ModelSection,
    /// `seed` is replaced by a seed derived from the root.
    pub train: TrainConfig,
    pub tune: TuneSection,
    pub augment: AugmentSection,
    pub rationalize: RationalizeSection,
    pub synth: SynthSpec,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            jobs: 1,
            data: DataPaths::default(),
            split_ratio: 0.8,
            model: ModelSection::default(),
            train: TrainConfig::default(),
            tune: TuneSection::default(),
            augment: AugmentSection::default(),
            rationalize: RationalizeSection::default(),
            synth: SynthSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub labelled: Option<PathBuf>,
    pub unlabelled: Option<PathBuf>,
    /// Built-in library layout when absent.
    pub layout: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSection {
    pub kind: ModelKind,
    #[serde(flatten)]
    pub options: ModelOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneSection {
    pub algorithm: Algorithm,
    pub max_trials: usize,
    pub goal: Option<f64>,
    /// Defaults to the optimizer's standard space.
    pub space: Option<SearchSpace>,
}

impl Default for TuneSection {
    fn default() -> Self {
        let base = fingerloc::ExperimentConfig::default();
        Self { algorithm: base.algorithm, max_trials: base.max_trials, goal: base.goal, space: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    pub strategy: Strategy,
    pub protocol: Protocol,
    /// Also train with and without augmentation and compare.
    pub evaluate: bool,
    /// Evaluation repeats, each on its own split and training seed.
    pub runs: usize,
    /// `seed` is replaced by a seed derived from the root.
    pub policy: AugmentationPolicy,
}

impl Default for AugmentSection {
    fn default() -> Self {
        Self {
            strategy: Strategy::Hybrid,
            protocol: Protocol::default(),
            evaluate: false,
            runs: 5,
            policy: AugmentationPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RationalizeSection {
    pub runs: usize,
    pub residual_rule: ResidualRule,
}

impl Default for RationalizeSection {
    fn default() -> Self {
        Self { runs: 5, residual_rule: ResidualRule::default() }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
        Self::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_owned()));
        if self.jobs == 0 {
            return bad("jobs must be at least 1");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad("split_ratio must lie strictly between 0 and 1");
        }
        if self.augment.runs == 0 || self.rationalize.runs == 0 {
            return bad("runs must be at least 1");
        }
        self.train.validate().map_err(fingerloc::Error::from)?;
        self.augment.policy.validate()?;
        Ok(())
    }

    pub fn search_space(&self) -> SearchSpace {
        self.tune.space.clone().unwrap_or_else(|| SearchSpace::default_for(&self.train.optimizer))
    }

    /// Fills missing data paths from `data_dir` and makes every path
    /// absolute so a manifest can be replayed from anywhere.
    pub fn resolve_paths(&mut self, data_dir: Option<&Path>) -> Result<()> {
        if let Some(dir) = data_dir {
            self.data.labelled.get_or_insert_with(|| dir.join(LABELLED_FILE));
            self.data.unlabelled.get_or_insert_with(|| dir.join(UNLABELLED_FILE));
        }
        for p in [&mut self.data.labelled, &mut self.data.unlabelled, &mut self.data.layout].into_iter().flatten() {
            *p = std::path::absolute(&*p).map_err(|source| CliError::Read { path: p.clone(), source })?;
        }
        Ok(())
    }
}

/// Switches the optimizer family, keeping the configured values when the
/// family already matches.
pub fn with_optimizer(current: &OptimizerConfig, name: &str) -> OptimizerConfig {
    if current.name() == name {
        return *current;
    }
    match name {
        "sgd" => OptimizerConfig::sgd(),
        _ => OptimizerConfig::adam(),
    }
}
