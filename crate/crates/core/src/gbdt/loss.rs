use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Training objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Half squared error; one raw output.
    Squared,
    /// Binary log loss on one logit.
    Logistic,
    /// Multiclass cross-entropy on C logits.
    Softmax,
}

/// Floor applied to class priors so degenerate label sets still give finite base scores.
pub(crate) const PRIOR_FLOOR: f64 = 1e-6;

pub fn sigmoid<F: Scalar>(r: F) -> F {
    if r >= F::zero() {
        F::one() / (F::one() + (-r).exp())
    } else {
        let e = r.exp();
        e / (F::one() + e)
    }
}

pub fn softmax<F: Scalar>(raw: &[F]) -> Vec<F> {
    let max = raw.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = raw.iter().map(|&r| (r - max).exp()).collect();
    let sum: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn softplus<F: Scalar>(r: F) -> F {
    if r > F::zero() {
        r + (-r).exp().ln_1p()
    } else {
        r.exp().ln_1p()
    }
}

impl Loss {
    pub fn is_classification(self) -> bool {
        !matches!(self, Loss::Squared)
    }

    /// Loss of one row given its raw output(s) and target (class index for classification).
    pub fn value<F: Scalar>(self, raw: &[F], target: F) -> F {
        match self {
            Loss::Squared => {
                let d = raw[0] - target;
                F::lit(0.5) * d * d
            }
            Loss::Logistic => softplus(raw[0]) - target * raw[0],
            Loss::Softmax => {
                let max = raw.iter().copied().fold(F::neg_infinity(), F::max);
                let lse = max + raw.iter().map(|&r| (r - max).exp()).sum::<F>().ln();
                let y = target.to_usize().expect("class index");
                lse - raw[y]
            }
        }
    }

    /// Writes per-output gradients and hessians of one row into `g` and `h`.
    pub(crate) fn grad_hess<F: Scalar>(self, raw: &[F], target: F, g: &mut [F], h: &mut [F]) {
        match self {
            Loss::Squared => {
                g[0] = raw[0] - target;
                h[0] = F::one();
            }
            Loss::Logistic => {
                let p = sigmoid(raw[0]);
                g[0] = p - target;
                h[0] = p * (F::one() - p);
            }
            Loss::Softmax => {
                let p = softmax(raw);
                let y = target.to_usize().expect("class index");
                for k in 0..raw.len() {
                    let ind = if k == y { F::one() } else { F::zero() };
                    g[k] = p[k] - ind;
                    h[k] = p[k] * (F::one() - p[k]);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!((sigmoid(3.0f64.ln()) - 0.75).abs() < 1e-15);
        assert!(sigmoid(-800.0f64) >= 0.0 && sigmoid(800.0f64) <= 1.0);
    }

    #[test]
    fn softmax_equal_logits() {
        let p = softmax(&[0.3f64; 5]);
        for v in p {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let eps = 1e-6;
        for loss in [Loss::Squared, Loss::Logistic] {
            let (raw, y) = (0.37f64, 1.0);
            let mut g = [0.0];
            let mut h = [0.0];
            loss.grad_hess(&[raw], y, &mut g, &mut h);
            let fd = (loss.value(&[raw + eps], y) - loss.value(&[raw - eps], y)) / (2.0 * eps);
            assert!((g[0] - fd).abs() < 1e-7, "{loss:?}");
        }
        let raw = [0.2f64, -0.4, 1.1];
        let mut g = [0.0; 3];
        let mut h = [0.0; 3];
        Loss::Softmax.grad_hess(&raw, 2.0, &mut g, &mut h);
        for k in 0..3 {
            let mut up = raw;
            let mut dn = raw;
            up[k] += eps;
            dn[k] -= eps;
            let fd = (Loss::Softmax.value(&up, 2.0) - Loss::Softmax.value(&dn, 2.0)) / (2.0 * eps);
            assert!((g[k] - fd).abs() < 1e-7);
        }
    }
}
