//! Tabular datasets: schema, CSV I/O, target encoding, splitting and synthetic generators.

mod csv_io;
mod encoder;
mod schema;
mod split;
mod synth;

pub use csv_io::{load_csv, load_csv_with_classes, write_csv};
pub use encoder::{encode, fit_encoder, ColumnEncoding, EncoderState};
pub use schema::{Column, ColumnKind, ColumnSchema, Task};
pub use split::{train_test_split, SplitIndices};
pub use synth::{gen_blobs, gen_friedman1, gen_friedman1_with_features, FRIEDMAN1_DEFAULT_FEATURES};

use crate::error::{Error, Result};

/// One feature column's cells.
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureColumn {
    /// `None` marks a missing (empty) cell.
    Numeric(Vec<Option<f64>>),
    /// Tokens are interned: `codes[row]` indexes `vocab`.
    Categorical { vocab: Vec<String>, codes: Vec<u32> },
}

impl FeatureColumn {
    pub fn len(&self) -> usize {
        match self {
            FeatureColumn::Numeric(v) => v.len(),
            FeatureColumn::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Builds an interned categorical column from raw tokens.
    pub fn categorical<S: AsRef<str>>(tokens: &[S]) -> Self {
        let mut vocab: Vec<String> = Vec::new();
        let mut lookup = std::collections::HashMap::new();
        let codes = tokens
            .iter()
            .map(|t| {
                let t = t.as_ref();
                *lookup.entry(t.to_string()).or_insert_with(|| {
                    vocab.push(t.to_string());
                    (vocab.len() - 1) as u32
                })
            })
            .collect();
        FeatureColumn::Categorical { vocab, codes }
    }
}

/// Per-row targets; `None` marks an unlabelled row.
#[derive(Clone, Debug, PartialEq)]
pub enum Labels {
    Class { values: Vec<Option<usize>>, names: Vec<String> },
    Regression(Vec<Option<f64>>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Class { values, .. } => values.len(),
            Labels::Regression(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A typed table. Labelled / unlabelled / test partitions are index sets over one dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: ColumnSchema,
    features: Vec<FeatureColumn>,
    labels: Labels,
    row_count: usize,
}

impl Dataset {
    /// `features` follow the schema's feature columns in order.
    pub fn new(schema: ColumnSchema, features: Vec<FeatureColumn>, labels: Labels) -> Result<Self> {
        let row_count = labels.len();
        if features.len() != schema.feature_count() {
            return Err(Error::invalid(format!(
                "{} feature columns given, schema has {}",
                features.len(),
                schema.feature_count()
            )));
        }
        for (col, meta) in features.iter().zip(schema.features()) {
            if col.len() != row_count {
                return Err(Error::invalid(format!(
                    "column {:?} has {} cells, expected {row_count}",
                    meta.name,
                    col.len()
                )));
            }
            let ok = matches!(
                (col, meta.kind),
                (FeatureColumn::Numeric(_), ColumnKind::Numeric)
                    | (FeatureColumn::Categorical { .. }, ColumnKind::Categorical)
            );
            if !ok {
                return Err(Error::invalid(format!("column {:?} cells do not match kind {:?}", meta.name, meta.kind)));
            }
        }
        match (&labels, schema.task()) {
            (Labels::Class { values, names }, Task::Classification) => {
                if names.len() < 2 {
                    return Err(Error::invalid(format!(
                        "classification needs at least 2 classes, found {}",
                        names.len()
                    )));
                }
                if let Some(bad) = values.iter().flatten().find(|&&c| c >= names.len()) {
                    return Err(Error::invalid(format!("class label {bad} out of range 0..{}", names.len())));
                }
            }
            (Labels::Regression(_), Task::Regression) => {}
            _ => return Err(Error::invalid("label type does not match the schema target kind")),
        }
        Ok(Self { schema, features, labels, row_count })
    }

    pub fn schema(&self) -> &ColumnSchema {
        &self.schema
    }

    pub fn features(&self) -> &[FeatureColumn] {
        &self.features
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn task(&self) -> Task {
        self.schema.task()
    }

    /// Number of classes C; `None` for regression.
    pub fn class_count(&self) -> Option<usize> {
        match &self.labels {
            Labels::Class { names, .. } => Some(names.len()),
            Labels::Regression(_) => None,
        }
    }

    pub fn class_names(&self) -> Option<&[String]> {
        match &self.labels {
            Labels::Class { names, .. } => Some(names),
            Labels::Regression(_) => None,
        }
    }

    pub fn class_label(&self, row: usize) -> Option<usize> {
        match &self.labels {
            Labels::Class { values, .. } => values[row],
            Labels::Regression(_) => None,
        }
    }

    /// Target as a real number: the class index for classification.
    pub fn target_value(&self, row: usize) -> Option<f64> {
        match &self.labels {
            Labels::Class { values, .. } => values[row].map(|c| c as f64),
            Labels::Regression(v) => v[row],
        }
    }

    pub fn is_labelled(&self, row: usize) -> bool {
        self.target_value(row).is_some()
    }
}
