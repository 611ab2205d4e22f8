use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    entropy, ibug_affinities, ibug_uncertainty, staged_std_of_predictions, ve_classification, ve_regression_std,
    LeafCache, VeDecomposition,
};
use crate::error::{Error, Result};
use crate::gbdt::BoostedModel;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Entropy,
    StagedStd,
    VeTotal,
    VeData,
    VeKnowledge,
    VeRegression,
    Ibug,
}

impl ScoreKind {
    pub fn requires_classifier(self) -> Option<bool> {
        match self {
            ScoreKind::Entropy | ScoreKind::VeTotal | ScoreKind::VeData | ScoreKind::VeKnowledge => Some(true),
            ScoreKind::VeRegression | ScoreKind::Ibug => Some(false),
            ScoreKind::StagedStd => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScoreKind::Entropy => "entropy",
            ScoreKind::StagedStd => "staged_std",
            ScoreKind::VeTotal => "ve_total",
            ScoreKind::VeData => "ve_data",
            ScoreKind::VeKnowledge => "ve_knowledge",
            ScoreKind::VeRegression => "ve_regression",
            ScoreKind::Ibug => "ibug",
        }
    }
}

/// A validated acquisition value: finite and non-negative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyScore<F> {
    pub kind: ScoreKind,
    pub value: F,
}

impl<F: Scalar> UncertaintyScore<F> {
    pub fn new(kind: ScoreKind, value: F) -> Result<Self> {
        if !value.is_finite() || value < F::zero() {
            return Err(Error::invalid(format!("{} score {value} is not a finite non-negative value", kind.name())));
        }
        Ok(Self { kind, value })
    }
}

/// Training rows an IBUG score searches over.
#[derive(Clone, Copy, Debug)]
pub struct IbugReference<'a, F> {
    pub cache: &'a LeafCache,
    pub targets: &'a [F],
}

#[derive(Clone, Copy, Debug)]
pub struct ScoringContext<'a, F> {
    pub ve_members: usize,
    pub ibug_k: usize,
    pub ibug: Option<IbugReference<'a, F>>,
}

impl<F> Default for ScoringContext<'_, F> {
    fn default() -> Self {
        Self { ve_members: 10, ibug_k: 20, ibug: None }
    }
}

fn score_one<F: Scalar>(model: &BoostedModel<F>, x: &[F], kind: ScoreKind, ctx: &ScoringContext<'_, F>) -> Result<F> {
    let value = match kind {
        ScoreKind::Entropy => entropy(&model.predict_proba(x, None)?)?,
        ScoreKind::StagedStd => staged_std_of_predictions(&model.staged_predict(x)?)?,
        ScoreKind::VeTotal | ScoreKind::VeData | ScoreKind::VeKnowledge => {
            let d = ve_classification(&model.virtual_ensemble(x, ctx.ve_members)?)?;
            match kind {
                ScoreKind::VeTotal => d.total,
                ScoreKind::VeData => d.data,
                _ => d.knowledge,
            }
        }
        ScoreKind::VeRegression => {
            let members: Vec<F> = model.virtual_ensemble(x, ctx.ve_members)?.into_iter().map(|m| m[0]).collect();
            ve_regression_std(&members)?
        }
        ScoreKind::Ibug => {
            let reference = ctx.ibug.ok_or_else(|| Error::invalid("IBUG scoring needs training-row references"))?;
            let affinity = ibug_affinities(model, reference.cache, x)?;
            ibug_uncertainty(&affinity, reference.targets, ctx.ibug_k)?
        }
    };
    Ok(UncertaintyScore::new(kind, value)?.value)
}

fn check_kind<F: Scalar>(model: &BoostedModel<F>, kind: ScoreKind) -> Result<()> {
    match kind.requires_classifier() {
        Some(true) if !model.is_classifier() => {
            Err(Error::invalid(format!("{} scoring needs a classification model", kind.name())))
        }
        Some(false) if model.is_classifier() => {
            Err(Error::invalid(format!("{} scoring needs a regression model", kind.name())))
        }
        _ => Ok(()),
    }
}

/// Scores every pool row. Rows are scored in parallel into their own slots, so the
/// output is independent of thread count.
pub fn score_pool<F: Scalar>(
    model: &BoostedModel<F>,
    pool_x: &Matrix<F>,
    kind: ScoreKind,
    ctx: &ScoringContext<'_, F>,
) -> Result<Vec<F>> {
    check_kind(model, kind)?;
    (0..pool_x.rows()).into_par_iter().map(|i| score_one(model, pool_x.row(i), kind, ctx)).collect()
}

/// Full total / data / knowledge triple for every pool row of a classifier.
pub fn ve_pool<F: Scalar>(
    model: &BoostedModel<F>,
    pool_x: &Matrix<F>,
    members: usize,
) -> Result<Vec<VeDecomposition<F>>> {
    check_kind(model, ScoreKind::VeTotal)?;
    (0..pool_x.rows())
        .into_par_iter()
        .map(|i| ve_classification(&model.virtual_ensemble(pool_x.row(i), members)?))
        .collect()
}
