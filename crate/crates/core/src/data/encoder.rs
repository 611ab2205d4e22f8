use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ColumnKind, Dataset, FeatureColumn, Labels};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Fitted encoding for one feature column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnEncoding {
    /// Missing cells are replaced by the labelled-row median.
    Numeric { median: f64 },
    /// One token → value map per target channel.
    Categorical { channels: Vec<BTreeMap<String, f64>> },
}

/// Smoothed target statistics fitted on labelled rows only.
///
/// A token's encoding is `(sum_of_targets + a * prior) / (count + a)`; tokens never
/// seen among labelled rows encode to the prior. Binary and regression targets use
/// one channel; multiclass targets use one indicator channel per class, so each
/// categorical column expands to C encoded columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderState {
    smoothing: f64,
    priors: Vec<f64>,
    feature_names: Vec<String>,
    columns: Vec<ColumnEncoding>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Per-row target channels for the labelled rows.
fn target_channels(dataset: &Dataset, labelled_idx: &[usize]) -> Result<Vec<Vec<f64>>> {
    let missing = |i: usize| Error::invalid(format!("labelled row {i} has no label"));
    match dataset.labels() {
        Labels::Regression(v) => {
            labelled_idx.iter().map(|&i| v[i].map(|y| vec![y]).ok_or_else(|| missing(i))).collect()
        }
        Labels::Class { values, names } => {
            let c = names.len();
            labelled_idx
                .iter()
                .map(|&i| {
                    let label = values[i].ok_or_else(|| missing(i))?;
                    Ok(if c == 2 {
                        vec![label as f64]
                    } else {
                        (0..c).map(|k| if k == label { 1.0 } else { 0.0 }).collect()
                    })
                })
                .collect()
        }
    }
}

/// Fits the encoder from `labelled_idx` rows. `a` is the smoothing strength (≥ 0).
pub fn fit_encoder(dataset: &Dataset, labelled_idx: &[usize], a: f64) -> Result<EncoderState> {
    if labelled_idx.is_empty() {
        return Err(Error::Empty("labelled set".into()));
    }
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!("smoothing must be finite and non-negative, got {a}")));
    }
    if let Some(&bad) = labelled_idx.iter().find(|&&i| i >= dataset.row_count()) {
        return Err(Error::invalid(format!("row index {bad} out of range")));
    }
    let targets = target_channels(dataset, labelled_idx)?;
    let channels = targets[0].len();
    let n = labelled_idx.len() as f64;
    let priors: Vec<f64> = (0..channels).map(|k| targets.iter().map(|t| t[k]).sum::<f64>() / n).collect();

    let columns = dataset
        .features()
        .iter()
        .map(|col| match col {
            FeatureColumn::Numeric(v) => {
                let med = median(labelled_idx.iter().filter_map(|&i| v[i]).collect()).unwrap_or(0.0);
                ColumnEncoding::Numeric { median: med }
            }
            FeatureColumn::Categorical { vocab, codes } => {
                let mut sums = vec![vec![0.0; channels]; vocab.len()];
                let mut counts = vec![0usize; vocab.len()];
                for (t, &i) in targets.iter().zip(labelled_idx) {
                    let code = codes[i] as usize;
                    counts[code] += 1;
                    for k in 0..channels {
                        sums[code][k] += t[k];
                    }
                }
                let channels = (0..channels)
                    .map(|k| {
                        vocab
                            .iter()
                            .enumerate()
                            .filter(|&(code, _)| counts[code] > 0)
                            .map(|(code, tok)| {
                                let denom = counts[code] as f64 + a;
                                (tok.clone(), (sums[code][k] + a * priors[k]) / denom)
                            })
                            .collect()
                    })
                    .collect();
                ColumnEncoding::Categorical { channels }
            }
        })
        .collect();

    Ok(EncoderState {
        smoothing: a,
        priors,
        feature_names: dataset.schema().features().map(|c| c.name.clone()).collect(),
        columns,
    })
}

impl EncoderState {
    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn columns(&self) -> &[ColumnEncoding] {
        &self.columns
    }

    /// Encoded value of `token` in categorical column `col`, target channel `channel`.
    pub fn token_value(&self, col: usize, channel: usize, token: &str) -> Option<f64> {
        match self.columns.get(col)? {
            ColumnEncoding::Categorical { channels } => {
                Some(channels.get(channel)?.get(token).copied().unwrap_or(self.priors[channel]))
            }
            ColumnEncoding::Numeric { .. } => None,
        }
    }

    /// Width of the encoded feature matrix.
    pub fn output_dim(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match c {
                ColumnEncoding::Numeric { .. } => 1,
                ColumnEncoding::Categorical { channels } => channels.len(),
            })
            .sum()
    }

    fn check_compatible(&self, dataset: &Dataset) -> Result<()> {
        let names: Vec<&str> = dataset.schema().features().map(|c| c.name.as_str()).collect();
        let same_kinds = dataset.schema().features().zip(&self.columns).all(|(c, e)| {
            matches!(
                (c.kind, e),
                (ColumnKind::Numeric, ColumnEncoding::Numeric { .. })
                    | (ColumnKind::Categorical, ColumnEncoding::Categorical { .. })
            )
        });
        if names != self.feature_names || !same_kinds {
            return Err(Error::Schema(format!(
                "dataset features [{}] do not match encoder features [{}]",
                names.join(","),
                self.feature_names.join(",")
            )));
        }
        Ok(())
    }
}

/// Encodes rows `idx` into a numeric matrix: numeric cells pass through (missing →
/// labelled median), categorical cells become their smoothed target statistics.
pub fn encode<F: Scalar>(dataset: &Dataset, encoder: &EncoderState, idx: &[usize]) -> Result<Matrix<F>> {
    encoder.check_compatible(dataset)?;
    let dim = encoder.output_dim();
    let mut out = Matrix::zeros(idx.len(), dim);
    let mut offset = 0;
    for (col, enc) in dataset.features().iter().zip(&encoder.columns) {
        match (col, enc) {
            (FeatureColumn::Numeric(v), ColumnEncoding::Numeric { median }) => {
                for (r, &i) in idx.iter().enumerate() {
                    out.row_mut(r)[offset] = F::lit(v[i].unwrap_or(*median));
                }
                offset += 1;
            }
            (FeatureColumn::Categorical { vocab, codes }, ColumnEncoding::Categorical { channels }) => {
                for (k, map) in channels.iter().enumerate() {
                    let prior = encoder.priors[k];
                    let lookup: Vec<F> = vocab.iter().map(|t| F::lit(map.get(t).copied().unwrap_or(prior))).collect();
                    for (r, &i) in idx.iter().enumerate() {
                        out.row_mut(r)[offset + k] = lookup[codes[i] as usize];
                    }
                }
                offset += channels.len();
            }
            _ => unreachable!("compatibility checked"),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, ColumnSchema};

    fn cat_dataset(tokens: &[&str], labels: &[Option<usize>], classes: usize) -> Dataset {
        let schema = ColumnSchema::new(vec![
            Column::new("c", ColumnKind::Categorical),
            Column::new("y", ColumnKind::TargetClass),
        ])
        .unwrap();
        let names = (0..classes).map(|c| c.to_string()).collect();
        Dataset::new(schema, vec![FeatureColumn::categorical(tokens)], Labels::Class { values: labels.to_vec(), names })
            .unwrap()
    }

    #[test]
    fn smoothing_formula() {
        // "A" targets [1, 0, 1]; "B" target [0] brings the prior to 0.5.
        let ds = cat_dataset(&["A", "A", "A", "B"], &[Some(1), Some(0), Some(1), Some(0)], 2);
        let enc = fit_encoder(&ds, &[0, 1, 2, 3], 1.0).unwrap();
        assert_eq!(enc.priors(), &[0.5]);
        assert!((enc.token_value(0, 0, "A").unwrap() - 0.625).abs() < 1e-15);
        let m: Matrix<f64> = encode(&ds, &enc, &[0]).unwrap();
        assert!((m.get(0, 0) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn unseen_token_encodes_to_prior() {
        let ds = cat_dataset(&["A", "A", "Z"], &[Some(1), Some(0), None], 2);
        let enc = fit_encoder(&ds, &[0, 1], 1.0).unwrap();
        let m: Matrix<f64> = encode(&ds, &enc, &[2]).unwrap();
        assert_eq!(m.get(0, 0), 0.5);
    }

    #[test]
    fn zero_smoothing_is_raw_mean() {
        let ds = cat_dataset(&["A", "A"], &[Some(1), Some(1)], 2);
        let enc = fit_encoder(&ds, &[0, 1], 0.0).unwrap();
        assert_eq!(enc.token_value(0, 0, "A"), Some(1.0));
    }

    #[test]
    fn empty_labelled_set_errors() {
        let ds = cat_dataset(&["A"], &[Some(1)], 2);
        assert!(matches!(fit_encoder(&ds, &[], 1.0), Err(Error::Empty(_))));
    }

    #[test]
    fn multiclass_expands_to_indicator_channels() {
        let ds = cat_dataset(&["A", "A", "B"], &[Some(0), Some(2), Some(1)], 3);
        let enc = fit_encoder(&ds, &[0, 1, 2], 1.0).unwrap();
        assert_eq!(enc.output_dim(), 3);
        let m: Matrix<f64> = encode(&ds, &enc, &[0]).unwrap();
        let third = 1.0 / 3.0;
        // channel k for "A": (count of class k among A + prior_k) / (2 + 1)
        assert!((m.get(0, 0) - (1.0 + third) / 3.0).abs() < 1e-15);
        assert!((m.get(0, 1) - third / 3.0).abs() < 1e-15);
        assert!((m.get(0, 2) - (1.0 + third) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn missing_numeric_imputed_with_labelled_median() {
        let schema = ColumnSchema::new(vec![
            Column::new("a", ColumnKind::Numeric),
            Column::new("y", ColumnKind::TargetRegression),
        ])
        .unwrap();
        let ds = Dataset::new(
            schema,
            vec![FeatureColumn::Numeric(vec![Some(1.0), Some(3.0), Some(5.0), None, Some(100.0)])],
            Labels::Regression(vec![Some(0.0), Some(0.0), Some(0.0), Some(0.0), None]),
        )
        .unwrap();
        // row 4 is unlabelled and must not affect the median
        let enc = fit_encoder(&ds, &[0, 1, 2, 3], 1.0).unwrap();
        let m: Matrix<f64> = encode(&ds, &enc, &[0, 3]).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 3.0]);
    }
}
