use serde::{Deserialize, Serialize};

use super::loss::{sigmoid, softmax, Loss};
use super::params::TrainParams;
use super::tree::Tree;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Version of the JSON model document written by [`BoostedModel::to_json`].
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A fitted boosted ensemble.
///
/// Each stage holds one tree, or C trees under softmax. Stage order is training
/// order, so every prefix of the stage list is itself a valid (truncated) model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDocument<F>", into = "ModelDocument<F>", bound = "F: Scalar")]
pub struct BoostedModel<F> {
    params: TrainParams,
    loss: Loss,
    class_count: Option<usize>,
    n_features: usize,
    base_score: Vec<F>,
    stages: Vec<Vec<Tree<F>>>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(bound = "F: Scalar", deny_unknown_fields)]
struct ModelDocument<F> {
    format_version: u32,
    params: TrainParams,
    loss: Loss,
    class_count: Option<usize>,
    n_features: usize,
    base_score: Vec<F>,
    stages: Vec<Vec<Tree<F>>>,
}

impl<F: Scalar> TryFrom<ModelDocument<F>> for BoostedModel<F> {
    type Error = Error;

    fn try_from(d: ModelDocument<F>) -> Result<Self> {
        if d.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model format_version {} (expected {MODEL_FORMAT_VERSION})",
                d.format_version
            )));
        }
        BoostedModel::from_parts(d.params, d.loss, d.class_count, d.n_features, d.base_score, d.stages)
    }
}

impl<F: Scalar> From<BoostedModel<F>> for ModelDocument<F> {
    fn from(m: BoostedModel<F>) -> Self {
        ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            params: m.params,
            loss: m.loss,
            class_count: m.class_count,
            n_features: m.n_features,
            base_score: m.base_score,
            stages: m.stages,
        }
    }
}

/// Prefix lengths used as virtual-ensemble members: member `j` of `k` truncates at
/// `floor(T/2 + j (T/2) / k)`, so the last member is the full model. `k` is clamped
/// to `floor(T/2)` (minimum 1) when `T < 2k`.
pub fn virtual_ensemble_prefixes(num_stages: usize, members: usize) -> Result<Vec<usize>> {
    if members == 0 {
        return Err(Error::invalid("virtual ensemble needs at least one member"));
    }
    let t = num_stages;
    let k = if t < 2 * members { (t / 2).max(1) } else { members };
    Ok((1..=k).map(|j| (t * k + j * t) / (2 * k)).collect())
}

impl<F: Scalar> BoostedModel<F> {
    /// Assembles a model from parts, validating shapes. Useful for hand-built models.
    pub fn from_parts(
        params: TrainParams,
        loss: Loss,
        class_count: Option<usize>,
        n_features: usize,
        base_score: Vec<F>,
        stages: Vec<Vec<Tree<F>>>,
    ) -> Result<Self> {
        let outputs = match (loss, class_count) {
            (Loss::Squared, None) => 1,
            (Loss::Logistic, Some(2)) => 1,
            (Loss::Softmax, Some(c)) if c >= 2 => c,
            _ => return Err(Error::invalid(format!("loss {loss:?} incompatible with class count {class_count:?}"))),
        };
        if base_score.len() != outputs || base_score.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid(format!("base score must have {outputs} finite values")));
        }
        for (s, stage) in stages.iter().enumerate() {
            if stage.len() != outputs {
                return Err(Error::invalid(format!("stage {s} has {} trees, expected {outputs}", stage.len())));
            }
            if stage.iter().any(|t| t.max_feature().is_some_and(|f| f >= n_features)) {
                return Err(Error::invalid(format!("stage {s} splits on a feature >= {n_features}")));
            }
        }
        Ok(Self { params, loss, class_count, n_features, base_score, stages })
    }

    pub fn params(&self) -> &TrainParams {
        &self.params
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn class_count(&self) -> Option<usize> {
        self.class_count
    }

    pub fn is_classifier(&self) -> bool {
        self.loss.is_classification()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn base_score(&self) -> &[F] {
        &self.base_score
    }

    pub fn stages(&self) -> &[Vec<Tree<F>>] {
        &self.stages
    }

    /// Number of stages T.
    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    /// Raw outputs per stage: 1, or C for softmax.
    pub fn outputs(&self) -> usize {
        self.base_score.len()
    }

    pub fn tree_count(&self) -> usize {
        self.stages.len() * self.outputs()
    }

    fn check_x(&self, x: &[F]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::invalid(format!("input has {} features, model expects {}", x.len(), self.n_features)));
        }
        Ok(())
    }

    fn resolve_prefix(&self, prefix_len: Option<usize>) -> Result<usize> {
        match prefix_len {
            None => Ok(self.stages.len()),
            Some(p) if p >= 1 && p <= self.stages.len() => Ok(p),
            Some(p) => Err(Error::invalid(format!("prefix_len {p} outside 1..={}", self.stages.len()))),
        }
    }

    fn accumulate(&self, x: &[F], prefix: usize) -> Vec<F> {
        let mut raw = self.base_score.clone();
        for stage in &self.stages[..prefix] {
            for (r, tree) in raw.iter_mut().zip(stage) {
                *r += tree.predict(x);
            }
        }
        raw
    }

    /// Maps raw outputs to class probabilities (binary: `[1 − p, p]`).
    pub fn raw_to_proba(&self, raw: &[F]) -> Result<Vec<F>> {
        match self.loss {
            Loss::Squared => Err(Error::invalid("probabilities requested from a regression model")),
            Loss::Logistic => {
                let p = sigmoid(raw[0]);
                Ok(vec![F::one() - p, p])
            }
            Loss::Softmax => Ok(softmax(raw)),
        }
    }

    /// Base score plus the first `prefix_len` stages (all stages when `None`).
    pub fn predict_raw(&self, x: &[F], prefix_len: Option<usize>) -> Result<Vec<F>> {
        self.check_x(x)?;
        let prefix = self.resolve_prefix(prefix_len)?;
        Ok(self.accumulate(x, prefix))
    }

    pub fn predict_proba(&self, x: &[F], prefix_len: Option<usize>) -> Result<Vec<F>> {
        if !self.is_classifier() {
            return Err(Error::invalid("predict_proba called on a regression model"));
        }
        let raw = self.predict_raw(x, prefix_len)?;
        self.raw_to_proba(&raw)
    }

    /// Point prediction: the regression value, or the argmax class index (lowest index on ties).
    pub fn predict(&self, x: &[F]) -> Result<F> {
        if self.is_classifier() {
            let p = self.predict_proba(x, None)?;
            Ok(F::from_usize_lossy(argmax(&p)))
        } else {
            Ok(self.predict_raw(x, None)?[0])
        }
    }

    /// Raw outputs after every prefix length `1..=T`.
    pub fn staged_raw(&self, x: &[F]) -> Result<Vec<Vec<F>>> {
        self.check_x(x)?;
        let mut raw = self.base_score.clone();
        let mut out = Vec::with_capacity(self.stages.len());
        for stage in &self.stages {
            for (r, tree) in raw.iter_mut().zip(stage) {
                *r += tree.predict(x);
            }
            out.push(raw.clone());
        }
        Ok(out)
    }

    /// Staged predictions: probabilities for classifiers, one-element raw vectors for regression.
    pub fn staged_predict(&self, x: &[F]) -> Result<Vec<Vec<F>>> {
        let staged = self.staged_raw(x)?;
        if self.is_classifier() {
            staged.iter().map(|r| self.raw_to_proba(r)).collect()
        } else {
            Ok(staged)
        }
    }

    /// Virtual-ensemble member predictions (see [`virtual_ensemble_prefixes`]).
    pub fn virtual_ensemble(&self, x: &[F], members: usize) -> Result<Vec<Vec<F>>> {
        self.check_x(x)?;
        let prefixes = virtual_ensemble_prefixes(self.stages.len(), members)?;
        let mut raw = self.base_score.clone();
        let mut done = 0;
        let mut out = Vec::with_capacity(prefixes.len());
        for p in prefixes {
            for stage in &self.stages[done..p] {
                for (r, tree) in raw.iter_mut().zip(stage) {
                    *r += tree.predict(x);
                }
            }
            done = p;
            out.push(if self.is_classifier() { self.raw_to_proba(&raw)? } else { raw.clone() });
        }
        Ok(out)
    }

    /// Leaf ordinal of `x` in every tree, stage-major then class.
    pub fn leaf_indices(&self, x: &[F]) -> Result<Vec<usize>> {
        self.check_x(x)?;
        Ok(self.stages.iter().flat_map(|s| s.iter().map(|t| t.leaf_index(x))).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax<F: Scalar>(v: &[F]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
