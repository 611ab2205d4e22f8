use std::path::Path;

use super::{ColumnKind, ColumnSchema, Dataset, FeatureColumn, Labels};
use crate::error::{Error, Result};

fn parse_number(raw: &str, row: usize, column: &str) -> Result<Option<f64>> {
    let t = raw.trim();
    if t.is_empty() {
        return Ok(None);
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse { row, column: column.to_string(), value: raw.to_string() }),
    }
}

/// Class tokens sort numerically when every token is an integer, else lexicographically.
fn class_order(mut tokens: Vec<String>) -> Vec<String> {
    tokens.sort();
    tokens.dedup();
    if tokens.iter().all(|t| t.parse::<i64>().is_ok()) {
        tokens.sort_by_key(|t| t.parse::<i64>().unwrap());
    }
    tokens
}

/// Loads a CSV whose header names exactly the schema's columns (in any order).
pub fn load_csv(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<Dataset> {
    load_csv_with_classes(path, schema, None)
}

/// Like [`load_csv`], but maps class tokens through a fixed class-name list, so a
/// scoring file can reuse the class indexing of the data a model was trained on.
pub fn load_csv_with_classes(
    path: impl AsRef<Path>,
    schema: &ColumnSchema,
    class_names: Option<&[String]>,
) -> Result<Dataset> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "file not found")));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let schema = schema.reorder_to_header(&header)?;

    let ncols = header.len();
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); ncols];
    for record in reader.records() {
        let record = record?;
        for (j, cell) in record.iter().enumerate() {
            raw[j].push(cell.to_string());
        }
    }

    let mut features = Vec::with_capacity(ncols - 1);
    let mut labels = None;
    for (j, col) in schema.columns().iter().enumerate() {
        let cells = &raw[j];
        match col.kind {
            ColumnKind::Numeric => {
                let vals = cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| parse_number(c, i + 1, &col.name))
                    .collect::<Result<Vec<_>>>()?;
                features.push(FeatureColumn::Numeric(vals));
            }
            ColumnKind::Categorical => features.push(FeatureColumn::categorical(cells)),
            ColumnKind::TargetRegression => {
                let vals = cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| parse_number(c, i + 1, &col.name))
                    .collect::<Result<Vec<_>>>()?;
                labels = Some(Labels::Regression(vals));
            }
            ColumnKind::TargetClass => {
                let present: Vec<String> =
                    cells.iter().map(|c| c.trim()).filter(|c| !c.is_empty()).map(str::to_string).collect();
                let names = match class_names {
                    Some(n) => n.to_vec(),
                    None => class_order(present),
                };
                let values = cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let t = c.trim();
                        if t.is_empty() {
                            return Ok(None);
                        }
                        names.iter().position(|n| n == t).map(Some).ok_or_else(|| {
                            Error::invalid(format!("row {}, column {:?}: unknown class {t:?}", i + 1, col.name))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                labels = Some(Labels::Class { values, names });
            }
        }
    }
    Dataset::new(schema, features, labels.expect("schema has a target column"))
}

/// Writes the dataset with one header row in schema order. Floats use the shortest
/// representation that round-trips.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    let schema = dataset.schema();
    w.write_record(schema.columns().iter().map(|c| c.name.as_str()))?;
    let target_pos = schema.target_position();
    let mut record: Vec<String> = Vec::with_capacity(schema.columns().len());
    for i in 0..dataset.row_count() {
        record.clear();
        let mut feats = dataset.features().iter();
        for j in 0..schema.columns().len() {
            if j == target_pos {
                record.push(match dataset.labels() {
                    Labels::Class { values, names } => values[i].map(|c| names[c].clone()).unwrap_or_default(),
                    Labels::Regression(v) => v[i].map(|x| x.to_string()).unwrap_or_default(),
                });
                continue;
            }
            record.push(match feats.next().expect("feature column") {
                FeatureColumn::Numeric(v) => v[i].map(|x| x.to_string()).unwrap_or_default(),
                FeatureColumn::Categorical { vocab, codes } => vocab[codes[i] as usize].clone(),
            });
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
