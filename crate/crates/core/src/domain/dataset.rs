//! Tabular dataset model: typed feature schema, row storage, CSV round-trip.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// What kind of values a column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    Categorical,
    Numeric,
    /// ISO-8601 calendar dates (`YYYY-MM-DD`).
    Date,
    /// Structured identifiers (IBAN-like). Never used as model input.
    AccountId,
}

/// How a column participates in the workflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureRole {
    /// Ordinary model input.
    Feature,
    /// Model input that is also re-identifying and subject to generalization.
    QuasiIdentifier,
    /// Sensitive attribute; model input unless dropped, always available to
    /// evaluation metrics.
    Protected,
    /// Prediction target.
    Label,
    /// Kept in the dataset for lineage or evaluation, invisible to models.
    Excluded,
}

/// Schema entry for one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    pub kind: FeatureKind,
    pub role: FeatureRole,
    /// Closed value set for categorical columns, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<String>>,
}

impl FeatureDef {
    pub fn new(name: &str, kind: FeatureKind, role: FeatureRole) -> Self {
        FeatureDef { name: name.to_string(), kind, role, domain: None }
    }

    pub fn with_domain(mut self, domain: &[&str]) -> Self {
        self.domain = Some(domain.iter().map(|s| s.to_string()).collect());
        self
    }
}

/// A single cell. Numeric columns hold `Num`; everything else holds `Text`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV failure on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("header mismatch: expected column {expected:?} at position {position}, found {found:?}")]
    HeaderMismatch {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("row {row}: cannot parse {value:?} as a number for column {column:?}")]
    BadNumber {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row} has {found} values, expected {expected}")]
    RowArity {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("no feature named {0:?}")]
    UnknownFeature(String),
    #[error("dataset has no label column")]
    MissingLabel,
    #[error("label value {value:?} in row {row} is not 0 or 1")]
    BadLabel { row: usize, value: String },
}

/// In-memory dataset: schema plus row-major cells, with free-form lineage
/// notes that transforms append to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<FeatureDef>,
    pub rows: Vec<Vec<Cell>>,
    #[serde(default)]
    pub provenance: Vec<String>,
}

impl Dataset {
    pub fn new(features: Vec<FeatureDef>) -> Self {
        Dataset { features, rows: Vec::new(), provenance: Vec::new() }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Index and definition of a named column.
    pub fn feature(&self, name: &str) -> Option<(usize, &FeatureDef)> {
        self.features.iter().enumerate().find(|(_, f)| f.name == name)
    }

    pub fn feature_index(&self, name: &str) -> Result<usize, DataError> {
        self.feature(name)
            .map(|(i, _)| i)
            .ok_or_else(|| DataError::UnknownFeature(name.to_string()))
    }

    /// Columns a model is allowed to see: ordinary features, quasi-identifiers,
    /// and the protected attribute (until it is dropped). Label and excluded
    /// columns stay out of band.
    pub fn visible_features(&self) -> Vec<&FeatureDef> {
        self.features
            .iter()
            .filter(|f| {
                matches!(
                    f.role,
                    FeatureRole::Feature | FeatureRole::QuasiIdentifier | FeatureRole::Protected
                )
            })
            .collect()
    }

    /// Quasi-identifier columns still visible to models.
    pub fn quasi_identifiers(&self) -> Vec<&FeatureDef> {
        self.features
            .iter()
            .filter(|f| f.role == FeatureRole::QuasiIdentifier)
            .collect()
    }

    pub fn label_index(&self) -> Result<usize, DataError> {
        self.features
            .iter()
            .position(|f| f.role == FeatureRole::Label)
            .ok_or(DataError::MissingLabel)
    }

    /// Binary labels as 0/1.
    pub fn labels(&self) -> Result<Vec<u8>, DataError> {
        let li = self.label_index()?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| match &row[li] {
                Cell::Text(s) if s == "0" => Ok(0),
                Cell::Text(s) if s == "1" => Ok(1),
                Cell::Num(v) if *v == 0.0 => Ok(0),
                Cell::Num(v) if *v == 1.0 => Ok(1),
                other => Err(DataError::BadLabel { row: r + 1, value: other.render() }),
            })
            .collect()
    }

    /// All values of one column, rendered as strings.
    pub fn column_strings(&self, name: &str) -> Result<Vec<String>, DataError> {
        let i = self.feature_index(name)?;
        Ok(self.rows.iter().map(|r| r[i].render()).collect())
    }

    /// All values of one numeric column.
    pub fn column_numbers(&self, name: &str) -> Result<Vec<f64>, DataError> {
        let i = self.feature_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row[i].as_f64().ok_or_else(|| DataError::BadNumber {
                    row: r + 1,
                    column: name.to_string(),
                    value: row[i].render(),
                })
            })
            .collect()
    }

    /// New dataset containing the given rows (by index, in the given order).
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn push_provenance(&mut self, note: impl Into<String>) {
        self.provenance.push(note.into());
    }

    /// Writes the dataset as RFC-4180 CSV with a header row.
    pub fn write_csv(&self, path: &Path) -> Result<(), DataError> {
        let wrap = |source: csv::Error| DataError::Csv { path: path.display().to_string(), source };
        let mut w = csv::Writer::from_path(path)
            .map_err(wrap)?;
        w.write_record(self.features.iter().map(|f| f.name.as_str()))
            .map_err(wrap)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.render())).map_err(wrap)?;
        }
        w.flush().map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
        Ok(())
    }

    /// Reads a CSV written with [`Dataset::write_csv`], typing cells per the
    /// given schema. The header must match the schema's column names exactly.
    pub fn read_csv(path: &Path, features: Vec<FeatureDef>) -> Result<Dataset, DataError> {
        let wrap = |source: csv::Error| DataError::Csv { path: path.display().to_string(), source };
        let mut r = csv::Reader::from_path(path).map_err(wrap)?;
        let header = r.headers().map_err(wrap)?.clone();
        if header.len() != features.len() {
            return Err(DataError::RowArity { row: 0, found: header.len(), expected: features.len() });
        }
        for (i, f) in features.iter().enumerate() {
            if header.get(i) != Some(f.name.as_str()) {
                return Err(DataError::HeaderMismatch {
                    position: i,
                    expected: f.name.clone(),
                    found: header.get(i).unwrap_or("").to_string(),
                });
            }
        }
        let mut rows = Vec::new();
        for (rix, rec) in r.records().enumerate() {
            let rec = rec.map_err(wrap)?;
            if rec.len() != features.len() {
                return Err(DataError::RowArity { row: rix + 1, found: rec.len(), expected: features.len() });
            }
            let mut row = Vec::with_capacity(features.len());
            for (f, raw) in features.iter().zip(rec.iter()) {
                let cell = match f.kind {
                    FeatureKind::Numeric => Cell::Num(raw.parse::<f64>().map_err(|_| {
                        DataError::BadNumber { row: rix + 1, column: f.name.clone(), value: raw.to_string() }
                    })?),
                    _ => Cell::Text(raw.to_string()),
                };
                row.push(cell);
            }
            rows.push(row);
        }
        Ok(Dataset { features, rows, provenance: Vec::new() })
    }

    /// Structural consistency check used before any pipeline work starts.
    /// Returns human-readable violations instead of failing fast so callers
    /// can report everything at once.
    pub fn structural_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for f in &self.features {
            if !seen.insert(f.name.as_str()) {
                out.push(format!("duplicate feature name {:?}", f.name));
            }
        }
        let labels: Vec<usize> = self
            .features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.role == FeatureRole::Label)
            .map(|(i, _)| i)
            .collect();
        match labels.len() {
            0 => out.push("missing label column".to_string()),
            1 => {}
            n => out.push(format!("multiple label columns ({n})")),
        }
        for (rix, row) in self.rows.iter().enumerate() {
            if row.len() != self.features.len() {
                out.push(format!(
                    "row {} has {} values, expected {}",
                    rix + 1,
                    row.len(),
                    self.features.len()
                ));
                // One arity report is enough; deeper checks assume arity holds.
                return out;
            }
        }
        if let Some(&li) = labels.first() {
            let mut bad = 0usize;
            for row in &self.rows {
                let ok = matches!(&row[li], Cell::Text(s) if s == "0" || s == "1")
                    || matches!(&row[li], Cell::Num(v) if *v == 0.0 || *v == 1.0);
                if !ok {
                    bad += 1;
                }
            }
            if bad > 0 {
                out.push(format!("label not binary ({bad} rows outside {{0,1}})"));
            }
        }
        for (cix, f) in self.features.iter().enumerate() {
            if f.kind == FeatureKind::Numeric {
                if let Some(row) = self.rows.iter().find(|r| r[cix].as_f64().is_none()) {
                    out.push(format!(
                        "non-numeric value {:?} in numeric column {:?}",
                        row[cix].render(),
                        f.name
                    ));
                }
            }
            if let Some(domain) = &f.domain {
                let allowed: HashSet<&str> = domain.iter().map(|s| s.as_str()).collect();
                let mut outside = 0usize;
                let mut sample = None;
                for row in &self.rows {
                    if let Cell::Text(s) = &row[cix] {
                        if !allowed.contains(s.as_str()) {
                            outside += 1;
                            sample.get_or_insert_with(|| s.clone());
                        }
                    }
                }
                if outside > 0 {
                    out.push(format!(
                        "value {:?} outside declared domain of {:?} ({} rows)",
                        sample.unwrap_or_default(),
                        f.name,
                        outside
                    ));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_schema() -> Vec<FeatureDef> {
        vec![
            FeatureDef::new("color", FeatureKind::Categorical, FeatureRole::Feature)
                .with_domain(&["red", "blue"]),
            FeatureDef::new("amount", FeatureKind::Numeric, FeatureRole::Feature),
            FeatureDef::new("label", FeatureKind::Categorical, FeatureRole::Label)
                .with_domain(&["0", "1"]),
        ]
    }

    fn small_dataset() -> Dataset {
        let mut d = Dataset::new(small_schema());
        d.rows.push(vec![Cell::Text("red".into()), Cell::Num(1.5), Cell::Text("0".into())]);
        d.rows.push(vec![Cell::Text("blue".into()), Cell::Num(2.25), Cell::Text("1".into())]);
        d
    }

    #[test]
    fn labels_parse_binary_values() {
        let d = small_dataset();
        assert_eq!(d.labels().unwrap(), vec![0, 1]);
    }

    #[test]
    fn csv_round_trip_preserves_cells() {
        let d = small_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        d.write_csv(&path).unwrap();
        let back = Dataset::read_csv(&path, small_schema()).unwrap();
        assert_eq!(back.rows, d.rows);
    }

    #[test]
    fn read_csv_rejects_wrong_header() {
        let d = small_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        d.write_csv(&path).unwrap();
        let mut schema = small_schema();
        schema[0].name = "colour".into();
        let err = Dataset::read_csv(&path, schema).unwrap_err();
        assert!(matches!(err, DataError::HeaderMismatch { position: 0, .. }));
    }

    #[test]
    fn structural_violations_flag_bad_label() {
        let mut d = small_dataset();
        d.rows.push(vec![Cell::Text("red".into()), Cell::Num(0.0), Cell::Text("2".into())]);
        let v = d.structural_violations();
        assert!(v.iter().any(|m| m.contains("label not binary")), "{v:?}");
        assert!(v.iter().any(|m| m.contains("outside declared domain")), "{v:?}");
    }

    #[test]
    fn visible_features_exclude_label_and_excluded() {
        let mut d = small_dataset();
        d.features.push(FeatureDef::new("iban", FeatureKind::AccountId, FeatureRole::Excluded));
        for row in &mut d.rows {
            row.push(Cell::Text("XX00".into()));
        }
        let names: Vec<&str> = d.visible_features().iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, vec!["color", "amount"]);
    }
}
