use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Column, ColumnKind, ColumnSchema, Dataset, FeatureColumn, Labels};
use crate::error::{Error, Result};

pub const FRIEDMAN1_DEFAULT_FEATURES: usize = 10;

fn feature_columns(d: usize, target: ColumnKind) -> Result<ColumnSchema> {
    let mut cols: Vec<Column> = (0..d).map(|j| Column::new(format!("x{j}"), ColumnKind::Numeric)).collect();
    cols.push(Column::new("y", target));
    ColumnSchema::new(cols)
}

/// Isotropic unit-variance Gaussian clusters, one per class.
///
/// Class means sit on a regular polygon in the first two dimensions with adjacent
/// means exactly `separation` apart (two classes: a segment of that length). Row `i`
/// belongs to class `i % classes`.
pub fn gen_blobs(n: usize, d: usize, classes: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || d < 2 || classes < 2 {
        return Err(Error::invalid(format!("gen_blobs needs n > 0, d >= 2, classes >= 2 (got {n}, {d}, {classes})")));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(Error::invalid(format!("separation must be finite and non-negative, got {separation}")));
    }
    let radius = separation / (2.0 * (PI / classes as f64).sin());
    let means: Vec<[f64; 2]> = (0..classes)
        .map(|c| {
            let angle = 2.0 * PI * c as f64 / classes as f64;
            [radius * angle.cos(), radius * angle.sin()]
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = vec![Vec::with_capacity(n); d];
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        for (j, col) in cols.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            let mean = if j < 2 { means[c][j] } else { 0.0 };
            col.push(Some(mean + z));
        }
        labels.push(Some(c));
    }
    Dataset::new(
        feature_columns(d, ColumnKind::TargetClass)?,
        cols.into_iter().map(FeatureColumn::Numeric).collect(),
        Labels::Class { values: labels, names: (0..classes).map(|c| c.to_string()).collect() },
    )
}

/// Friedman-1 regression with [`FRIEDMAN1_DEFAULT_FEATURES`] uniform features.
pub fn gen_friedman1(n: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    gen_friedman1_with_features(n, FRIEDMAN1_DEFAULT_FEATURES, noise_sd, seed)
}

/// `y = 10 sin(π x0 x1) + 20 (x2 − 0.5)² + 10 x3 + 5 x4 + ε`, `x ~ U[0,1]^d`, `ε ~ N(0, noise_sd²)`.
/// Features beyond the fifth are pure noise.
pub fn gen_friedman1_with_features(n: usize, d: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || d < 5 {
        return Err(Error::invalid(format!("gen_friedman1 needs n > 0 and at least 5 features (got {n}, {d})")));
    }
    if !(noise_sd.is_finite() && noise_sd >= 0.0) {
        return Err(Error::invalid(format!("noise_sd must be finite and non-negative, got {noise_sd}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = vec![Vec::with_capacity(n); d];
    let mut ys = Vec::with_capacity(n);
    let mut x = vec![0.0; d];
    for _ in 0..n {
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = rng.random::<f64>();
            cols[j].push(Some(*xj));
        }
        let eps: f64 = rng.sample(StandardNormal);
        ys.push(Some(friedman1(&x) + noise_sd * eps));
    }
    Dataset::new(
        feature_columns(d, ColumnKind::TargetRegression)?,
        cols.into_iter().map(FeatureColumn::Numeric).collect(),
        Labels::Regression(ys),
    )
}

pub(crate) fn friedman1(x: &[f64]) -> f64 {
    10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_balanced_classes() {
        let ds = gen_blobs(100, 2, 4, 10.0, 7).unwrap();
        assert_eq!(ds.row_count(), 100);
        assert_eq!(ds.class_count(), Some(4));
        for c in 0..4 {
            assert_eq!((0..100).filter(|&i| ds.class_label(i) == Some(c)).count(), 25);
        }
    }

    #[test]
    fn blob_means_are_separated() {
        let ds = gen_blobs(4000, 2, 4, 10.0, 3).unwrap();
        let mut means = [[0.0f64; 2]; 4];
        for i in 0..4000 {
            let c = ds.class_label(i).unwrap();
            for (j, col) in ds.features().iter().enumerate() {
                if let FeatureColumn::Numeric(v) = col {
                    means[c][j] += v[i].unwrap() / 1000.0;
                }
            }
        }
        let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        assert!((dist(means[0], means[1]) - 10.0).abs() < 0.3);
    }

    #[test]
    fn friedman_closed_form_at_half() {
        let v = friedman1(&[0.5; 5]);
        let expected = 10.0 * (PI / 4.0).sin() + 5.0 + 2.5;
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 14.571_067_811_865_476).abs() < 1e-12);
    }

    #[test]
    fn friedman_noise_free_rows_match_formula() {
        let ds = gen_friedman1(20, 0.0, 5).unwrap();
        for i in 0..20 {
            let x: Vec<f64> = ds
                .features()
                .iter()
                .map(|c| match c {
                    FeatureColumn::Numeric(v) => v[i].unwrap(),
                    _ => unreachable!(),
                })
                .collect();
            assert!(x.iter().all(|&v| (0.0..1.0).contains(&v)));
            assert_eq!(ds.target_value(i).unwrap(), friedman1(&x));
        }
    }

    #[test]
    fn generators_are_pure() {
        assert_eq!(gen_blobs(30, 3, 3, 2.0, 11).unwrap(), gen_blobs(30, 3, 3, 2.0, 11).unwrap());
        assert_eq!(gen_friedman1(30, 1.0, 11).unwrap(), gen_friedman1(30, 1.0, 11).unwrap());
        assert_ne!(gen_friedman1(30, 1.0, 11).unwrap(), gen_friedman1(30, 1.0, 12).unwrap());
    }

    #[test]
    fn invalid_sizes() {
        assert!(gen_blobs(0, 2, 2, 1.0, 0).is_err());
        assert!(gen_blobs(10, 1, 2, 1.0, 0).is_err());
        assert!(gen_friedman1_with_features(10, 4, 0.0, 0).is_err());
    }
}
