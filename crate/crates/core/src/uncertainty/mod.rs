//! Per-instance acquisition scores: entropy, staged-prediction spread, virtual
//! ensemble decomposition and IBUG neighbour variance.

mod ibug;
mod pool;

pub use ibug::{ibug_affinities, ibug_uncertainty, LeafCache};
pub use pool::{score_pool, ve_pool, IbugReference, ScoreKind, ScoringContext, UncertaintyScore};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn distribution_tolerance<F: Scalar>(len: usize) -> F {
    F::lit(1e-9).max(F::epsilon() * F::lit(16.0) * F::from_usize_lossy(len.max(1)))
}

fn check_distribution<F: Scalar>(probs: &[F]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::invalid("empty probability vector"));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < F::zero()) {
        return Err(Error::invalid(format!("probabilities must be finite and non-negative: {probs:?}")));
    }
    let sum: F = probs.iter().copied().sum();
    if (sum - F::one()).abs() > distribution_tolerance(probs.len()) {
        return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

fn entropy_unchecked<F: Scalar>(probs: &[F]) -> F {
    probs.iter().filter(|&&p| p > F::zero()).map(|&p| -p * p.ln()).sum()
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy<F: Scalar>(probs: &[F]) -> Result<F> {
    check_distribution(probs)?;
    Ok(entropy_unchecked(probs))
}

/// Sample standard deviation (divisor `n − 1`).
fn sample_std<F: Scalar>(values: &[F]) -> F {
    let n = F::from_usize_lossy(values.len());
    let mean = values.iter().copied().sum::<F>() / n;
    let ss: F = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
    (ss / (n - F::one())).sqrt()
}

/// Standard deviation of a sequence of staged predictions, divisor `T − 1`.
pub fn staged_std<F: Scalar>(staged: &[F]) -> Result<F> {
    if staged.len() < 2 {
        return Err(Error::invalid(format!("staged_std needs at least 2 stages, got {}", staged.len())));
    }
    Ok(sample_std(staged))
}

/// [`staged_std`] over staged prediction vectors as produced by
/// `BoostedModel::staged_predict`: one-element vectors (regression) use the value,
/// binary probability pairs use the positive class, and multiclass vectors average
/// the per-class spreads.
pub fn staged_std_of_predictions<F: Scalar>(staged: &[Vec<F>]) -> Result<F> {
    let width = staged.first().map_or(0, Vec::len);
    if staged.iter().any(|s| s.len() != width) || width == 0 {
        return Err(Error::invalid("staged predictions must share a non-zero width"));
    }
    let column = |c: usize| staged.iter().map(|s| s[c]).collect::<Vec<F>>();
    match width {
        1 => staged_std(&column(0)),
        2 => staged_std(&column(1)),
        c => {
            let mut acc = F::zero();
            for k in 0..c {
                acc += staged_std(&column(k))?;
            }
            Ok(acc / F::from_usize_lossy(c))
        }
    }
}

/// Ensemble uncertainty split into expected data uncertainty and member disagreement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VeDecomposition<F> {
    /// Entropy of the mean member distribution.
    pub total: F,
    /// Mean of the member entropies.
    pub data: F,
    /// `total − data`, the mutual information between prediction and member.
    pub knowledge: F,
}

/// Decomposes the uncertainty of `k` member class distributions.
pub fn ve_classification<F: Scalar>(members: &[Vec<F>]) -> Result<VeDecomposition<F>> {
    if members.is_empty() {
        return Err(Error::invalid("virtual ensemble has no members"));
    }
    let c = members[0].len();
    for m in members {
        if m.len() != c {
            return Err(Error::invalid("member distributions differ in length"));
        }
        check_distribution(m)?;
    }
    if members.iter().all(|m| m == &members[0]) {
        let h = entropy_unchecked(&members[0]);
        return Ok(VeDecomposition { total: h, data: h, knowledge: F::zero() });
    }
    let k = F::from_usize_lossy(members.len());
    let mean: Vec<F> = (0..c).map(|j| members.iter().map(|m| m[j]).sum::<F>() / k).collect();
    let total = entropy_unchecked(&mean);
    let data = members.iter().map(|m| entropy_unchecked(m)).sum::<F>() / k;
    let mut knowledge = total - data;
    let tol = F::lit(1e-12).max(F::epsilon() * F::lit(64.0));
    if knowledge < F::zero() && knowledge >= -tol {
        knowledge = F::zero();
    }
    Ok(VeDecomposition { total, data, knowledge })
}

/// Spread of virtual-ensemble point predictions (divisor `k − 1`).
pub fn ve_regression_std<F: Scalar>(members: &[F]) -> Result<F> {
    if members.len() < 2 {
        return Err(Error::invalid(format!("ve_regression_std needs at least 2 members, got {}", members.len())));
    }
    Ok(sample_std(members))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_values() {
        assert!((entropy(&[0.5f64, 0.5]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(entropy(&[1.0f64, 0.0]).unwrap(), 0.0);
        // -(0.9 ln 0.9 + 0.1 ln 0.1)
        let oracle = -(0.9f64 * 0.9f64.ln() + 0.1 * 0.1f64.ln());
        assert!((oracle - 0.325_083).abs() < 1e-6);
        assert!((entropy(&[0.9f64, 0.1]).unwrap() - oracle).abs() < 1e-15);
    }

    #[test]
    fn entropy_rejects_invalid() {
        assert!(entropy(&[0.5f64, 0.6]).is_err());
        assert!(entropy(&[-0.1f64, 1.1]).is_err());
        assert!(entropy::<f64>(&[]).is_err());
    }

    #[test]
    fn staged_std_values() {
        // variance (0.04 + 0 + 0.04) / 2
        let v = staged_std(&[0.2f64, 0.4, 0.6]).unwrap();
        assert!((v - 0.2).abs() < 1e-12);
        assert_eq!(staged_std(&[0.7f64; 5]).unwrap(), 0.0);
        assert!(staged_std(&[0.7f64]).is_err());
    }

    #[test]
    fn staged_std_by_width() {
        let binary = vec![vec![0.8f64, 0.2], vec![0.6, 0.4], vec![0.4, 0.6]];
        assert!((staged_std_of_predictions(&binary).unwrap() - 0.2).abs() < 1e-12);
        let three = vec![vec![0.2f64, 0.2, 0.6], vec![0.4, 0.2, 0.4], vec![0.6, 0.2, 0.2]];
        assert!((staged_std_of_predictions(&three).unwrap() - 0.4 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ve_decomposition_cases() {
        let d = ve_classification(&[vec![1.0f64, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((d.total - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(d.data, 0.0);
        assert!((d.knowledge - std::f64::consts::LN_2).abs() < 1e-15);

        let same = ve_classification(&vec![vec![0.3f64, 0.7]; 4]).unwrap();
        assert_eq!(same.knowledge, 0.0);
        assert!((same.total - same.data).abs() < 1e-15);

        assert_eq!(ve_classification(&[vec![0.1f64, 0.9]]).unwrap().knowledge, 0.0);
        assert!(ve_classification(&[vec![0.1f64, 0.8]]).is_err());
    }

    #[test]
    fn ve_regression_values() {
        assert!((ve_regression_std(&[1.0f64, 3.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(ve_regression_std(&[2.5f64; 3]).unwrap(), 0.0);
        assert!(ve_regression_std(&[1.0f64]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        assert!((entropy(&[0.5f32, 0.5]).unwrap() - std::f32::consts::LN_2).abs() < 1e-6);
        assert!((staged_std(&[0.2f32, 0.4, 0.6]).unwrap() - 0.2).abs() < 1e-6);
    }
}
