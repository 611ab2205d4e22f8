use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ceal::{CealConfig, CealMode, UncertaintySource};
use crate::data::{
    gen_blobs, gen_friedman1_with_features, load_csv, ColumnSchema, Dataset, Task, FRIEDMAN1_DEFAULT_FEATURES,
};
use crate::error::{Error, Result};
use crate::gbdt::TrainParams;
use crate::uncertainty::ScoreKind;

/// Where an experiment's rows come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Relative paths resolve against the config file's directory.
    Csv {
        csv: PathBuf,
        schema: PathBuf,
    },
    Blobs {
        n: usize,
        d: usize,
        classes: usize,
        separation: f64,
        seed: u64,
    },
    Friedman1 {
        n: usize,
        noise_sd: f64,
        seed: u64,
        #[serde(default = "default_friedman_features")]
        features: usize,
    },
}

fn default_friedman_features() -> usize {
    FRIEDMAN1_DEFAULT_FEATURES
}

impl DatasetSource {
    fn task(&self) -> Option<Task> {
        match self {
            DatasetSource::Csv { .. } => None,
            DatasetSource::Blobs { .. } => Some(Task::Classification),
            DatasetSource::Friedman1 { .. } => Some(Task::Regression),
        }
    }

    pub fn load(&self, base_dir: &Path) -> Result<Dataset> {
        match self {
            DatasetSource::Csv { csv, schema } => {
                let schema = ColumnSchema::from_json_file(base_dir.join(schema))?;
                load_csv(base_dir.join(csv), &schema)
            }
            &DatasetSource::Blobs { n, d, classes, separation, seed } => gen_blobs(n, d, classes, separation, seed),
            &DatasetSource::Friedman1 { n, noise_sd, seed, features } => {
                gen_friedman1_with_features(n, features, noise_sd, seed)
            }
        }
    }

    /// Same source with CSV paths made absolute against `base_dir`.
    pub fn anchored(&self, base_dir: &Path) -> Self {
        match self {
            DatasetSource::Csv { csv, schema } => {
                DatasetSource::Csv { csv: base_dir.join(csv), schema: base_dir.join(schema) }
            }
            other => other.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    Entropy,
    StagedStd,
    VeTotal,
    VeData,
    VeKnowledge,
    VeRegression,
    Ibug,
    Gsx,
}

impl Strategy {
    pub const ALL: [Strategy; 9] = [
        Strategy::Random,
        Strategy::Entropy,
        Strategy::StagedStd,
        Strategy::VeTotal,
        Strategy::VeData,
        Strategy::VeKnowledge,
        Strategy::VeRegression,
        Strategy::Ibug,
        Strategy::Gsx,
    ];

    /// Scoring rule behind an uncertainty strategy; `None` for random and GSx.
    pub fn score_kind(self) -> Option<ScoreKind> {
        Some(match self {
            Strategy::Random | Strategy::Gsx => return None,
            Strategy::Entropy => ScoreKind::Entropy,
            Strategy::StagedStd => ScoreKind::StagedStd,
            Strategy::VeTotal => ScoreKind::VeTotal,
            Strategy::VeData => ScoreKind::VeData,
            Strategy::VeKnowledge => ScoreKind::VeKnowledge,
            Strategy::VeRegression => ScoreKind::VeRegression,
            Strategy::Ibug => ScoreKind::Ibug,
        })
    }

    pub fn supports(self, task: Task) -> bool {
        match self.score_kind().and_then(ScoreKind::requires_classifier) {
            Some(true) => task == Task::Classification,
            Some(false) => task == Task::Regression,
            None => true,
        }
    }

    pub fn name(self) -> &'static str {
        match self.score_kind() {
            Some(kind) => kind.name(),
            None if self == Strategy::Random => "random",
            None => "gsx",
        }
    }
}

impl UncertaintySource {
    pub fn score_kind(self) -> ScoreKind {
        match self {
            UncertaintySource::StagedStd => ScoreKind::StagedStd,
            UncertaintySource::VeKnowledge => ScoreKind::VeKnowledge,
            UncertaintySource::VeRegression => ScoreKind::VeRegression,
            UncertaintySource::Ibug => ScoreKind::Ibug,
        }
    }
}

fn default_fraction() -> f64 {
    0.2
}

fn default_ve_members() -> usize {
    10
}

fn default_ibug_k() -> usize {
    20
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_smoothing() -> f64 {
    1.0
}

/// One active-learning experiment, run once per seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub task: Task,
    pub strategy: Strategy,
    #[serde(default)]
    pub ceal: CealConfig,
    #[serde(default = "default_fraction")]
    pub initial_fraction: f64,
    /// Batch size as a fraction of the original train pool.
    #[serde(default = "default_fraction")]
    pub batch_fraction: f64,
    /// Maximum number of query iterations; `None` runs until the pool is empty.
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default)]
    pub train_params: TrainParams,
    #[serde(default = "default_ve_members")]
    pub ve_members: usize,
    #[serde(default = "default_ibug_k")]
    pub ibug_k: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_smoothing")]
    pub encoder_smoothing: f64,
}

impl ExperimentConfig {
    /// Defaults for everything but the three required fields.
    pub fn new(dataset: DatasetSource, task: Task, strategy: Strategy) -> Self {
        Self {
            dataset,
            task,
            strategy,
            ceal: CealConfig::default(),
            initial_fraction: default_fraction(),
            batch_fraction: default_fraction(),
            budget: None,
            train_params: TrainParams::default(),
            ve_members: default_ve_members(),
            ibug_k: default_ibug_k(),
            seeds: default_seeds(),
            test_fraction: default_fraction(),
            encoder_smoothing: default_smoothing(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(s)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Source of the model-uncertainty values used by `mceal` / `hybrid` / regression pseudo-labelling.
    pub fn uncertainty_source(&self) -> UncertaintySource {
        if let Some(source) = self.ceal.uncertainty_source {
            return source;
        }
        match (self.task, self.strategy) {
            (Task::Classification, Strategy::StagedStd) => UncertaintySource::StagedStd,
            (Task::Classification, _) => UncertaintySource::VeKnowledge,
            (Task::Regression, Strategy::StagedStd) => UncertaintySource::StagedStd,
            (Task::Regression, Strategy::Ibug) => UncertaintySource::Ibug,
            (Task::Regression, _) => UncertaintySource::VeRegression,
        }
    }

    /// Copy with every defaulted choice written out.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        if out.ceal.mode != CealMode::None {
            out.ceal.uncertainty_source = Some(self.uncertainty_source());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let frac = |field: &str, v: f64| -> Result<()> {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be in (0, 1), got {v}")))
            }
        };
        frac("initial_fraction", self.initial_fraction)?;
        frac("batch_fraction", self.batch_fraction)?;
        frac("test_fraction", self.test_fraction)?;
        if let Some(task) = self.dataset.task() {
            if task != self.task {
                return Err(Error::config("task", format!("dataset source produces a {task:?} task")));
            }
        }
        if !self.strategy.supports(self.task) {
            return Err(Error::config(
                "strategy",
                format!("{} does not apply to a {:?} task", self.strategy.name(), self.task),
            ));
        }
        if self.ve_members == 0 {
            return Err(Error::config("ve_members", "must be at least 1"));
        }
        if self.ibug_k == 0 {
            return Err(Error::config("ibug_k", "must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if !(self.encoder_smoothing.is_finite() && self.encoder_smoothing >= 0.0) {
            return Err(Error::config(
                "encoder_smoothing",
                format!("must be non-negative, got {}", self.encoder_smoothing),
            ));
        }
        self.train_params.validate()?;
        self.ceal.validate()?;
        if self.ceal.mode != CealMode::None {
            if self.task == Task::Regression && self.ceal.mode == CealMode::Hybrid {
                return Err(Error::config(
                    "ceal.mode",
                    "hybrid needs class probabilities; use ceal or mceal for regression",
                ));
            }
            let kind = self.uncertainty_source().score_kind();
            let ok = match kind.requires_classifier() {
                Some(true) => self.task == Task::Classification,
                Some(false) => self.task == Task::Regression,
                None => true,
            };
            if !ok {
                return Err(Error::config(
                    "ceal.uncertainty_source",
                    format!("{} does not apply to a {:?} task", kind.name(), self.task),
                ));
            }
        }
        Ok(())
    }

    /// Hash of every setting except the seed list, as 16 hex digits.
    pub fn fingerprint(&self) -> String {
        let mut unseeded = self.resolved();
        unseeded.seeds.clear();
        let digest = Sha256::digest(serde_json::to_vec(&unseeded).expect("config serializes"));
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
