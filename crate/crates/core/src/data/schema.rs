use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Role of one CSV column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    TargetClass,
    TargetRegression,
}

impl ColumnKind {
    pub fn is_target(self) -> bool {
        matches!(self, ColumnKind::TargetClass | ColumnKind::TargetRegression)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self { name: name.into(), kind }
    }
}

/// Ordered column list with exactly one target and at least one feature.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Column>", into = "Vec<Column>")]
pub struct ColumnSchema {
    columns: Vec<Column>,
    target: usize,
}

impl ColumnSchema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name {:?}", c.name)));
            }
        }
        let targets: Vec<usize> =
            columns.iter().enumerate().filter(|(_, c)| c.kind.is_target()).map(|(i, _)| i).collect();
        if targets.len() != 1 {
            return Err(Error::Schema(format!("expected exactly one target column, found {}", targets.len())));
        }
        if columns.len() < 2 {
            return Err(Error::Schema("at least one feature column is required".into()));
        }
        Ok(Self { columns, target: targets[0] })
    }

    /// Parses the `{"column": "kind", ...}` document. Column order is taken from
    /// the key order of the map (lexicographic); CSV loading re-orders by header.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let map: BTreeMap<String, ColumnKind> = serde_json::from_str(s)?;
        Self::new(map.into_iter().map(|(name, kind)| Column { name, kind }).collect())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        let map: BTreeMap<&str, ColumnKind> = self.columns.iter().map(|c| (c.name.as_str(), c.kind)).collect();
        serde_json::to_string_pretty(&map).expect("schema map serializes")
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn target(&self) -> &Column {
        &self.columns[self.target]
    }

    pub fn target_position(&self) -> usize {
        self.target
    }

    pub fn features(&self) -> impl Iterator<Item = &Column> + '_ {
        self.columns.iter().filter(|c| !c.kind.is_target())
    }

    pub fn feature_count(&self) -> usize {
        self.columns.len() - 1
    }

    pub fn task(&self) -> Task {
        match self.target().kind {
            ColumnKind::TargetClass => Task::Classification,
            _ => Task::Regression,
        }
    }

    /// Returns this schema re-ordered to match `header`, which must name exactly the same columns.
    pub fn reorder_to_header(&self, header: &[String]) -> Result<Self> {
        let expected: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        let mismatch = || {
            Error::HeaderMismatch(format!(
                "header [{}] does not match schema columns [{}]",
                header.join(","),
                expected.join(",")
            ))
        };
        if header.len() != self.columns.len() {
            return Err(mismatch());
        }
        let mut columns = Vec::with_capacity(header.len());
        for name in header {
            let col = self.columns.iter().find(|c| &c.name == name).ok_or_else(mismatch)?;
            columns.push(col.clone());
        }
        Self::new(columns).map_err(|_| mismatch())
    }
}

impl TryFrom<Vec<Column>> for ColumnSchema {
    type Error = Error;

    fn try_from(columns: Vec<Column>) -> Result<Self> {
        Self::new(columns)
    }
}

impl From<ColumnSchema> for Vec<Column> {
    fn from(s: ColumnSchema) -> Self {
        s.columns
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_kind_keys() {
        let s = ColumnSchema::from_json_str(r#"{"a": "numeric", "b": "categorical", "y": "target_class"}"#).unwrap();
        assert_eq!(s.task(), Task::Classification);
        assert_eq!(s.feature_count(), 2);
        assert_eq!(s.target().name, "y");
    }

    #[test]
    fn rejects_two_targets_and_no_features() {
        let two = ColumnSchema::from_json_str(r#"{"a": "target_regression", "y": "target_class"}"#);
        assert!(matches!(two, Err(Error::Schema(_))));
        let none = ColumnSchema::from_json_str(r#"{"y": "target_class"}"#);
        assert!(matches!(none, Err(Error::Schema(_))));
    }

    #[test]
    fn rejects_unknown_kind() {
        assert!(ColumnSchema::from_json_str(r#"{"a": "text", "y": "target_class"}"#).is_err());
    }
}
