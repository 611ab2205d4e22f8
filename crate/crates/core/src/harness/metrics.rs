//! Test-set metrics.

use crate::error::{Error, Result};

/// Stand-in for an unbounded-below R² (constant targets, imperfect predictions).
pub const R2_FLOOR: f64 = -1e30;

fn check(a: usize, b: usize) -> Result<()> {
    if a == 0 {
        return Err(Error::Empty("metric input".into()));
    }
    if a != b {
        return Err(Error::invalid(format!("metric inputs have lengths {a} and {b}")));
    }
    Ok(())
}

pub fn accuracy(preds: &[usize], labels: &[usize]) -> Result<f64> {
    check(preds.len(), labels.len())?;
    let hits = preds.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / preds.len() as f64)
}

pub fn mse(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check(preds.len(), targets.len())?;
    Ok(preds.iter().zip(targets).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / preds.len() as f64)
}

/// `1 − SS_res / SS_tot`; 0 when both sums vanish, [`R2_FLOOR`] when only `SS_tot` does.
pub fn r2(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check(preds.len(), targets.len())?;
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    let ss_tot: f64 = targets.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = preds.iter().zip(targets).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok(match (ss_tot == 0.0, ss_res == 0.0) {
        (true, true) => 0.0,
        (true, false) => R2_FLOOR,
        _ => (1.0 - ss_res / ss_tot).max(R2_FLOOR),
    })
}

/// Mann–Whitney AUC with half credit for ties. `None` unless both classes occur.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<Option<f64>> {
    check(scores.len(), labels.len())?;
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::invalid(format!("score {i} is not finite")));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of mid-ranks (1-based) of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(Some(u / (n_pos as f64 * n_neg as f64)))
}

/// Unweighted mean of one-vs-rest AUCs over the classes whose AUC is defined.
pub fn auc_macro(per_class_scores: &[Vec<f64>], labels: &[usize]) -> Result<Option<f64>> {
    check(per_class_scores.len(), labels.len())?;
    let c = per_class_scores[0].len();
    if per_class_scores.iter().any(|p| p.len() != c) {
        return Err(Error::invalid("per-class score rows differ in width"));
    }
    let mut total = 0.0;
    let mut defined = 0usize;
    for k in 0..c {
        let scores: Vec<f64> = per_class_scores.iter().map(|p| p[k]).collect();
        let hits: Vec<bool> = labels.iter().map(|&l| l == k).collect();
        if let Some(a) = auc(&scores, &hits)? {
            total += a;
            defined += 1;
        }
    }
    Ok((defined > 0).then(|| total / defined as f64))
}
