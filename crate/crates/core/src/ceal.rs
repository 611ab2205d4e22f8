//! Pseudo-labelling of high-confidence pool instances.
//!
//! Classification keeps instances whose entropy (`ceal`), model uncertainty
//! (`mceal`) or both (`hybrid`) fall strictly below their thresholds and labels them
//! with the argmax class. Regression keeps instances whose model uncertainty falls
//! below the threshold and labels them with the point prediction. Instances that
//! fail the filter are excluded, never labelled.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbdt::argmax;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CealMode {
    #[default]
    None,
    /// Entropy filter.
    Ceal,
    /// Model-uncertainty filter.
    Mceal,
    /// Entropy filter followed by the model-uncertainty filter.
    Hybrid,
}

impl CealMode {
    pub fn name(self) -> &'static str {
        match self {
            CealMode::None => "none",
            CealMode::Ceal => "ceal",
            CealMode::Mceal => "mceal",
            CealMode::Hybrid => "hybrid",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    Absolute,
    /// Thresholds are the `quantile`-quantile of the pool's current values.
    #[default]
    Quantile,
}

/// Source of the model-uncertainty values fed to the filter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintySource {
    StagedStd,
    VeKnowledge,
    VeRegression,
    Ibug,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CealConfig {
    pub mode: CealMode,
    pub threshold_kind: ThresholdKind,
    /// Absolute entropy threshold (nats).
    pub entropy_threshold: Option<f64>,
    /// Absolute model-uncertainty threshold.
    pub uncertainty_threshold: Option<f64>,
    /// Quantile level used for both thresholds in quantile mode.
    pub quantile: f64,
    /// `None` picks the default for the task and strategy.
    pub uncertainty_source: Option<UncertaintySource>,
}

impl Default for CealConfig {
    fn default() -> Self {
        Self {
            mode: CealMode::None,
            threshold_kind: ThresholdKind::Quantile,
            entropy_threshold: None,
            uncertainty_threshold: None,
            quantile: 0.05,
            uncertainty_source: None,
        }
    }
}

impl CealConfig {
    pub fn enabled(mode: CealMode) -> Self {
        Self { mode, ..Self::default() }
    }

    pub fn uses_entropy(&self) -> bool {
        matches!(self.mode, CealMode::Ceal | CealMode::Hybrid)
    }

    pub fn uses_uncertainty(&self) -> bool {
        matches!(self.mode, CealMode::Mceal | CealMode::Hybrid)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |field: &str, v: Option<f64>, needed: bool| -> Result<()> {
            match v {
                Some(t) if t.is_nan() || t < 0.0 => {
                    Err(Error::config(format!("ceal.{field}"), format!("must be >= 0, got {t}")))
                }
                None if needed => {
                    Err(Error::config(format!("ceal.{field}"), format!("required by mode {}", self.mode.name())))
                }
                _ => Ok(()),
            }
        };
        match self.threshold_kind {
            ThresholdKind::Absolute => {
                check("entropy_threshold", self.entropy_threshold, self.uses_entropy())?;
                check("uncertainty_threshold", self.uncertainty_threshold, self.uses_uncertainty())?;
            }
            ThresholdKind::Quantile => {
                if self.mode != CealMode::None && !(self.quantile > 0.0 && self.quantile < 1.0) {
                    return Err(Error::config("ceal.quantile", format!("must be in (0, 1), got {}", self.quantile)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "F: Scalar")]
pub enum PseudoLabel<F> {
    Class(usize),
    Value(F),
}

/// Pool position → pseudo-label, produced fresh at one iteration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct PseudoLabelSet<F> {
    pub iteration: usize,
    pub labels: BTreeMap<usize, PseudoLabel<F>>,
}

impl<F: Scalar> PseudoLabelSet<F> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels.keys().copied()
    }
}

/// Quantile by linear interpolation between order statistics (position `q (n − 1)`).
pub fn quantile<F: Scalar>(values: &[F], q: f64) -> Result<F> {
    if values.is_empty() {
        return Err(Error::Empty("quantile of no values".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("quantile level {q} outside [0, 1]")));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = F::lit(pos - lo as f64);
    Ok(v[lo] + (v[hi] - v[lo]) * frac)
}

/// Acceptance cut-off for one filter stage.
#[derive(Clone, Copy, Debug)]
enum Cut<F> {
    /// Keep values strictly below.
    Below(F),
    /// Keep values at or below; quantiles of tree outputs often sit on a run of ties.
    AtMost(F),
}

impl<F: Scalar> Cut<F> {
    fn keeps(self, v: F) -> bool {
        match self {
            Cut::Below(t) => v < t,
            Cut::AtMost(t) => v <= t,
        }
    }
}

fn resolve<F: Scalar>(config: &CealConfig, absolute: Option<f64>, values: &[F], field: &str) -> Result<Cut<F>> {
    match config.threshold_kind {
        ThresholdKind::Absolute => {
            let t = absolute.ok_or_else(|| {
                Error::config(format!("ceal.{field}"), format!("required by mode {}", config.mode.name()))
            })?;
            if t.is_nan() || t < 0.0 {
                return Err(Error::config(format!("ceal.{field}"), format!("must be >= 0, got {t}")));
            }
            Ok(Cut::Below(F::from_f64(t).unwrap_or_else(F::infinity)))
        }
        ThresholdKind::Quantile => Ok(Cut::AtMost(quantile(values, config.quantile)?)),
    }
}

fn check_len(name: &str, len: usize, expected: usize) -> Result<()> {
    if len != expected {
        return Err(Error::invalid(format!("{name} has {len} entries, expected {expected}")));
    }
    Ok(())
}

/// Classification pseudo-labels. `uncertainties` is required by `mceal` and `hybrid`.
/// Absolute thresholds keep values strictly below; quantile thresholds keep values at or below.
pub fn filter_classification<F: Scalar>(
    probs: &[Vec<F>],
    entropies: &[F],
    uncertainties: Option<&[F]>,
    config: &CealConfig,
    iteration: usize,
) -> Result<PseudoLabelSet<F>> {
    if config.mode == CealMode::None {
        return Err(Error::invalid("filter_classification called with ceal mode none"));
    }
    config.validate()?;
    let n = probs.len();
    check_len("entropies", entropies.len(), n)?;
    let mut keep = vec![true; n];
    if n == 0 {
        return Ok(PseudoLabelSet { iteration, labels: BTreeMap::new() });
    }
    if config.uses_entropy() {
        let delta = resolve(config, config.entropy_threshold, entropies, "entropy_threshold")?;
        for (k, &e) in keep.iter_mut().zip(entropies) {
            *k &= delta.keeps(e);
        }
    }
    if config.uses_uncertainty() {
        let u = uncertainties.ok_or_else(|| Error::invalid("model uncertainties required by this ceal mode"))?;
        check_len("uncertainties", u.len(), n)?;
        // quantile thresholds are resolved over the whole pool, not the stage-1 survivors
        let delta = resolve(config, config.uncertainty_threshold, u, "uncertainty_threshold")?;
        for (k, &v) in keep.iter_mut().zip(u) {
            *k &= delta.keeps(v);
        }
    }
    let labels =
        keep.iter().enumerate().filter(|(_, &k)| k).map(|(i, _)| (i, PseudoLabel::Class(argmax(&probs[i])))).collect();
    Ok(PseudoLabelSet { iteration, labels })
}

/// Regression pseudo-labels: instances with uncertainty below the threshold take the
/// model's point prediction. A quantile threshold also keeps values equal to it.
pub fn filter_regression<F: Scalar>(
    predictions: &[F],
    uncertainties: &[F],
    config: &CealConfig,
    iteration: usize,
) -> Result<PseudoLabelSet<F>> {
    if config.mode == CealMode::None {
        return Err(Error::invalid("filter_regression called with ceal mode none"));
    }
    let n = predictions.len();
    check_len("uncertainties", uncertainties.len(), n)?;
    if n == 0 {
        return Ok(PseudoLabelSet { iteration, labels: BTreeMap::new() });
    }
    if config.threshold_kind == ThresholdKind::Quantile {
        config.validate()?;
    }
    let delta = resolve(config, config.uncertainty_threshold, uncertainties, "uncertainty_threshold")?;
    let labels = uncertainties
        .iter()
        .zip(predictions)
        .enumerate()
        .filter(|(_, (&u, _))| delta.keeps(u))
        .map(|(i, (_, &y))| (i, PseudoLabel::Value(y)))
        .collect();
    Ok(PseudoLabelSet { iteration, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn absolute(mode: CealMode, entropy: Option<f64>, unc: Option<f64>) -> CealConfig {
        CealConfig {
            mode,
            threshold_kind: ThresholdKind::Absolute,
            entropy_threshold: entropy,
            uncertainty_threshold: unc,
            ..CealConfig::default()
        }
    }

    #[test]
    fn hybrid_two_stage_example() {
        let probs = vec![vec![0.99f64, 0.01]];
        let e = crate::uncertainty::entropy(&probs[0]).unwrap();
        assert!((e - 0.05600).abs() < 5e-6);
        let pass =
            filter_classification(&probs, &[e], Some(&[0.005]), &absolute(CealMode::Hybrid, Some(0.06), Some(0.01)), 1)
                .unwrap();
        assert_eq!(pass.labels.get(&0), Some(&PseudoLabel::Class(0)));
        let fail = filter_classification(
            &probs,
            &[e],
            Some(&[0.005]),
            &absolute(CealMode::Hybrid, Some(0.06), Some(0.001)),
            1,
        )
        .unwrap();
        assert!(fail.is_empty());
    }

    #[test]
    fn zero_thresholds_keep_nothing() {
        let probs = vec![vec![1.0f64, 0.0], vec![0.5, 0.5]];
        let s = filter_classification(
            &probs,
            &[0.0, 0.69],
            Some(&[0.0, 0.1]),
            &absolute(CealMode::Hybrid, Some(0.0), Some(0.0)),
            0,
        )
        .unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn errors() {
        let probs = vec![vec![0.5f64, 0.5]];
        assert!(
            filter_classification(&probs, &[0.1, 0.2], None, &absolute(CealMode::Ceal, Some(1.0), None), 0).is_err()
        );
        assert!(filter_classification(&probs, &[0.1], None, &CealConfig::default(), 0).is_err());
        assert!(filter_classification(&probs, &[0.1], None, &absolute(CealMode::Mceal, None, Some(1.0)), 0).is_err());
        assert!(filter_regression(&[1.0f64], &[0.1, 0.2], &CealConfig::enabled(CealMode::Ceal), 0).is_err());
        assert!(absolute(CealMode::Hybrid, Some(0.1), None).validate().is_err());
    }

    #[test]
    fn regression_rule() {
        let s = filter_regression(&[2.2f64, 7.7], &[0.1, 5.0], &absolute(CealMode::Ceal, None, Some(1.0)), 3).unwrap();
        assert_eq!(s.labels.into_iter().collect::<Vec<_>>(), vec![(0, PseudoLabel::Value(2.2))]);
        let all =
            filter_regression(&[1.0f64, 2.0], &[1e300, 3.0], &absolute(CealMode::Ceal, None, Some(f64::INFINITY)), 0)
                .unwrap();
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[4.0f64, 1.0, 3.0, 2.0], 0.5).unwrap(), 2.5);
        let cfg = CealConfig { quantile: 0.5, ..CealConfig::enabled(CealMode::Ceal) };
        let s = filter_regression(&[10.0f64, 20.0, 30.0, 40.0], &[1.0, 2.0, 3.0, 4.0], &cfg, 0).unwrap();
        assert_eq!(s.positions().collect::<Vec<_>>(), vec![0, 1]);
        let tied =
            filter_regression(&[1.0f64; 4], &[0.0, 0.0, 0.0, 3.0], &CealConfig::enabled(CealMode::Ceal), 0).unwrap();
        assert_eq!(tied.len(), 3);
    }
}
