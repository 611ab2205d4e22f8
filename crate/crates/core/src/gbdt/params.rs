use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boosting hyper-parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    /// Number of boosting stages T.
    pub num_stages: usize,
    pub learning_rate: f64,
    /// Depth 0 is a single leaf.
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Bernoulli row-sampling probability per stage; 1 means full batch.
    pub subsample: f64,
    /// Standard deviation of Gaussian noise added to every per-row gradient.
    pub langevin_noise_sd: f64,
    pub max_thresholds_per_feature: usize,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            num_stages: 200,
            learning_rate: 0.1,
            max_depth: 4,
            min_samples_leaf: 5,
            subsample: 1.0,
            langevin_noise_sd: 0.0,
            max_thresholds_per_feature: 64,
            seed: 0,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config(format!("train_params.{field}"), msg));
        if self.num_stages == 0 {
            return bad("num_stages", "must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate", format!("must be positive, got {}", self.learning_rate));
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf", "must be at least 1".into());
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample", format!("must be in (0, 1], got {}", self.subsample));
        }
        if !(self.langevin_noise_sd.is_finite() && self.langevin_noise_sd >= 0.0) {
            return bad("langevin_noise_sd", format!("must be non-negative, got {}", self.langevin_noise_sd));
        }
        if self.max_thresholds_per_feature == 0 || self.max_thresholds_per_feature > u16::MAX as usize - 1 {
            return bad(
                "max_thresholds_per_feature",
                format!("must be in 1..=65534, got {}", self.max_thresholds_per_feature),
            );
        }
        Ok(())
    }
}
