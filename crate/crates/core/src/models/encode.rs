//! Feature encoding for linear models: one-hot categoricals with an
//! explicit "other" bucket, standardized numerics, and dates as
//! standardized days-since-epoch. Encodings are fitted on the training
//! split only and applied unchanged elsewhere, so no statistics leak from
//! held-out data.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, FeatureKind};

/// Most one-hot levels a single column may claim; the long tail shares the
/// "other" slot with unseen values.
const LEVEL_CAP: usize = 64;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EncodeError {
    #[error("column {column:?}, row {row}: expected a number, found {value:?}")]
    NotNumeric { column: String, row: usize, value: String },
    #[error("column {column:?}, row {row}: cannot parse date {value:?}")]
    BadDate { column: String, row: usize, value: String },
    #[error("column {column:?} is missing from the dataset")]
    MissingColumn { column: String },
    #[error("no visible features to encode")]
    NoFeatures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum ColumnEncoding {
    /// (value − mean) / sd at slot `slot`. Constant columns are dropped at
    /// fit time and never produce a variant.
    Standardized { mean: f64, sd: f64, slot: usize, date: bool },
    /// One slot per level plus a trailing "other" slot for everything else.
    OneHot { levels: Vec<String>, first_slot: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    columns: Vec<(String, ColumnEncoding)>,
    dim: usize,
}

/// Row-major sparse design matrix; each row lists (slot, value) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub rows: Vec<Vec<(u32, f64)>>,
    pub dim: usize,
}

fn days_since_epoch(raw: &str) -> Option<f64> {
    let date: chrono::NaiveDate = raw.parse().ok()?;
    let epoch = chrono::NaiveDate::from_ymd_opt(1970, 1, 1).expect("epoch exists");
    Some((date - epoch).num_days() as f64)
}

fn numeric_value(
    data: &Dataset,
    col: usize,
    row: usize,
    date: bool,
) -> Result<f64, EncodeError> {
    let cell = &data.rows[row][col];
    if date {
        let raw = cell.render();
        days_since_epoch(&raw).ok_or_else(|| EncodeError::BadDate {
            column: data.features[col].name.clone(),
            row: row + 1,
            value: raw,
        })
    } else {
        cell.as_f64().ok_or_else(|| EncodeError::NotNumeric {
            column: data.features[col].name.clone(),
            row: row + 1,
            value: cell.render(),
        })
    }
}

/// Fits an encoding over the training split's visible features.
pub fn fit(train: &Dataset) -> Result<Encoder, EncodeError> {
    let visible: Vec<(usize, &crate::domain::FeatureDef)> = train
        .features
        .iter()
        .enumerate()
        .filter(|(_, f)| {
            matches!(
                f.role,
                crate::domain::FeatureRole::Feature
                    | crate::domain::FeatureRole::QuasiIdentifier
                    | crate::domain::FeatureRole::Protected
            )
        })
        .collect();
    if visible.is_empty() {
        return Err(EncodeError::NoFeatures);
    }

    let mut columns = Vec::new();
    let mut dim = 0usize;
    for (ix, def) in visible {
        match def.kind {
            FeatureKind::Numeric | FeatureKind::Date => {
                let date = def.kind == FeatureKind::Date;
                let values: Vec<f64> = (0..train.n_rows())
                    .map(|r| numeric_value(train, ix, r, date))
                    .collect::<Result<_, _>>()?;
                let n = values.len().max(1) as f64;
                let mean = values.iter().sum::<f64>() / n;
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd == 0.0 {
                    // A constant carries no signal; skip the slot entirely.
                    continue;
                }
                columns.push((
                    def.name.clone(),
                    ColumnEncoding::Standardized { mean, sd, slot: dim, date },
                ));
                dim += 1;
            }
            FeatureKind::Categorical | FeatureKind::AccountId => {
                let mut freq: HashMap<String, usize> = HashMap::new();
                for row in &train.rows {
                    *freq.entry(row[ix].render()).or_insert(0) += 1;
                }
                let mut ranked: Vec<(String, usize)> = freq.into_iter().collect();
                ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
                ranked.truncate(LEVEL_CAP);
                let levels: Vec<String> = ranked.into_iter().map(|(v, _)| v).collect();
                let width = levels.len() + 1; // trailing "other"
                columns.push((def.name.clone(), ColumnEncoding::OneHot { levels, first_slot: dim }));
                dim += width;
            }
        }
    }
    Ok(Encoder { columns, dim })
}

impl Encoder {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Human-readable name of every slot, aligned with weight vectors.
    pub fn slot_names(&self) -> Vec<String> {
        let mut names = vec![String::new(); self.dim];
        for (col, enc) in &self.columns {
            match enc {
                ColumnEncoding::Standardized { slot, .. } => names[*slot] = col.clone(),
                ColumnEncoding::OneHot { levels, first_slot } => {
                    for (i, level) in levels.iter().enumerate() {
                        names[first_slot + i] = format!("{col}={level}");
                    }
                    names[first_slot + levels.len()] = format!("{col}=<other>");
                }
            }
        }
        names
    }

    /// Encodes a dataset against the fitted schema. Unknown categorical
    /// values land in their column's "other" slot.
    pub fn transform(&self, data: &Dataset) -> Result<SparseMatrix, EncodeError> {
        let mut col_ix = Vec::with_capacity(self.columns.len());
        for (name, _) in &self.columns {
            col_ix.push(
                data.feature_index(name)
                    .map_err(|_| EncodeError::MissingColumn { column: name.clone() })?,
            );
        }
        let mut rows = Vec::with_capacity(data.n_rows());
        for r in 0..data.n_rows() {
            let mut row: Vec<(u32, f64)> = Vec::with_capacity(self.columns.len());
            for ((_, enc), &ix) in self.columns.iter().zip(&col_ix) {
                match enc {
                    ColumnEncoding::Standardized { mean, sd, slot, date } => {
                        let v = numeric_value(data, ix, r, *date)?;
                        row.push((*slot as u32, (v - mean) / sd));
                    }
                    ColumnEncoding::OneHot { levels, first_slot } => {
                        let v = data.rows[r][ix].render();
                        let offset =
                            levels.iter().position(|l| *l == v).unwrap_or(levels.len());
                        row.push(((first_slot + offset) as u32, 1.0));
                    }
                }
            }
            rows.push(row);
        }
        Ok(SparseMatrix { rows, dim: self.dim })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Cell, FeatureDef, FeatureRole};

    fn dataset() -> Dataset {
        let mut d = Dataset::new(vec![
            FeatureDef::new("amount", FeatureKind::Numeric, FeatureRole::Feature),
            FeatureDef::new("flat", FeatureKind::Numeric, FeatureRole::Feature),
            FeatureDef::new("color", FeatureKind::Categorical, FeatureRole::Feature),
            FeatureDef::new("when", FeatureKind::Date, FeatureRole::Feature),
            FeatureDef::new("y", FeatureKind::Categorical, FeatureRole::Label),
        ]);
        let rows = [
            (1.0, "red", "2023-01-01"),
            (2.0, "red", "2023-01-02"),
            (3.0, "blue", "2023-01-03"),
            (4.0, "green", "2023-01-04"),
        ];
        for (a, c, w) in rows {
            d.rows.push(vec![
                Cell::Num(a),
                Cell::Num(7.0),
                Cell::Text(c.into()),
                Cell::Text(w.into()),
                Cell::Text("0".into()),
            ]);
        }
        d
    }

    #[test]
    fn layout_standardizes_and_one_hots_with_other() {
        let d = dataset();
        let enc = fit(&d).unwrap();
        // amount (1) + color (3 levels + other = 4) + when (1); flat is
        // constant and dropped.
        assert_eq!(enc.dim(), 6);
        let names = enc.slot_names();
        assert_eq!(names[0], "amount");
        assert!(names.contains(&"color=red".to_string()));
        assert!(names.contains(&"color=<other>".to_string()));
        assert!(names.contains(&"when".to_string()));
        assert!(!names.iter().any(|n| n.contains("flat")));

        let m = enc.transform(&d).unwrap();
        assert_eq!(m.rows.len(), 4);
        // Standardized amount has zero mean across the train split.
        let mean: f64 = m.rows.iter().map(|r| r[0].1).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        // Every row carries exactly one hot slot for color.
        for row in &m.rows {
            let hot: Vec<&(u32, f64)> =
                row.iter().filter(|(s, _)| names[*s as usize].starts_with("color=")).collect();
            assert_eq!(hot.len(), 1);
            assert_eq!(hot[0].1, 1.0);
        }
    }

    #[test]
    fn unseen_values_route_to_other() {
        let d = dataset();
        let enc = fit(&d).unwrap();
        let names = enc.slot_names();
        let other_slot =
            names.iter().position(|n| n == "color=<other>").unwrap() as u32;
        let mut held_out = dataset();
        held_out.rows[0][2] = Cell::Text("violet".into());
        let m = enc.transform(&held_out).unwrap();
        assert!(m.rows[0].iter().any(|(s, v)| *s == other_slot && *v == 1.0));
    }

    #[test]
    fn frequency_ranks_break_ties_by_value() {
        let d = dataset();
        let enc = fit(&d).unwrap();
        let names = enc.slot_names();
        // red appears twice, then blue/green tie and sort by value.
        let red = names.iter().position(|n| n == "color=red").unwrap();
        let blue = names.iter().position(|n| n == "color=blue").unwrap();
        let green = names.iter().position(|n| n == "color=green").unwrap();
        assert!(red < blue && blue < green);
    }

    #[test]
    fn level_cap_spills_the_tail_into_other() {
        let mut d = Dataset::new(vec![
            FeatureDef::new("id", FeatureKind::Categorical, FeatureRole::Feature),
            FeatureDef::new("y", FeatureKind::Categorical, FeatureRole::Label),
        ]);
        for i in 0..200 {
            d.rows.push(vec![Cell::Text(format!("v{i:03}")), Cell::Text("0".into())]);
        }
        let enc = fit(&d).unwrap();
        assert_eq!(enc.dim(), LEVEL_CAP + 1);
        let m = enc.transform(&d).unwrap();
        let other_slot = LEVEL_CAP as u32;
        let spilled = m.rows.iter().filter(|r| r[0].0 == other_slot).count();
        assert_eq!(spilled, 200 - LEVEL_CAP);
    }

    #[test]
    fn dates_encode_as_days() {
        assert_eq!(days_since_epoch("1970-01-02"), Some(1.0));
        assert_eq!(days_since_epoch("2023-01-01"), Some(19358.0));
        assert_eq!(days_since_epoch("not-a-date"), None);
    }

    #[test]
    fn transform_needs_fitted_columns_present() {
        let d = dataset();
        let enc = fit(&d).unwrap();
        let mut wrong = d.clone();
        wrong.features[0].name = "renamed".into();
        assert!(matches!(
            enc.transform(&wrong),
            Err(EncodeError::MissingColumn { .. })
        ));
    }
}
