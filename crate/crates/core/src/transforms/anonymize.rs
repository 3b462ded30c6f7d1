//! Multidimensional k-anonymity via greedy median partitioning.
//!
//! Quasi-identifier columns are recursively split along the dimension with
//! the widest normalized range, at the feasible cut closest to the median,
//! until no split can keep at least k rows on both sides. Each resulting
//! region rewrites its rows' quasi-identifier cells with a shared
//! generalized label, so every row becomes indistinguishable from at least
//! k−1 others on those columns. The fitted partition is serializable and is
//! applied unchanged to held-out splits, which keeps train/validation/test
//! consistent and leak-free.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{Cell, Dataset, FeatureKind};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnonError {
    #[error("cannot enforce k = {k} on {n_rows} rows")]
    InfeasibleK { k: u64, n_rows: usize },
    #[error("quasi-identifier column missing: {0:?}")]
    MissingColumn(String),
    #[error("quasi-identifier column {column:?} has a non-numeric value {value:?}")]
    NonNumeric { column: String, value: String },
    #[error("dataset has no quasi-identifier columns")]
    NoQuasiIdentifiers,
}

/// How one quasi-identifier column is interpreted during partitioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum QiKind {
    Numeric,
    /// Values ordered lexicographically; splits cover contiguous runs.
    Categorical { order: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct QiColumn {
    name: String,
    kind: QiKind,
}

/// Generalized labels of one region, aligned with the quasi-identifier
/// columns. Numeric spans render as `[lo..hi]`; categorical spans join
/// their values with `|`; single-value spans keep the value unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Region {
    labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum CutSide {
    /// Values ≤ the cut (numeric) or with rank ≤ the cut (categorical).
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Split {
        /// Index into the quasi-identifier column list.
        dim: usize,
        /// Numeric threshold, or categorical rank, that closes the left side.
        cut: f64,
        /// Training row counts per side; unseen categorical values at apply
        /// time follow the larger side (ties go left).
        left_rows: usize,
        right_rows: usize,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        region: usize,
    },
}

/// A fitted generalization: the partition tree plus per-region labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationMap {
    pub k: u64,
    columns: Vec<QiColumn>,
    root: Node,
    regions: Vec<Region>,
}

/// Per-row quasi-identifier values mapped onto a common numeric scale
/// (raw numbers, or categorical ranks).
struct QiMatrix {
    columns: Vec<QiColumn>,
    /// `values[row][dim]`
    values: Vec<Vec<f64>>,
}

fn extract_matrix(data: &Dataset) -> Result<QiMatrix, AnonError> {
    let qi: Vec<(usize, &crate::domain::FeatureDef)> = data
        .features
        .iter()
        .enumerate()
        .filter(|(_, f)| f.role == crate::domain::FeatureRole::QuasiIdentifier)
        .collect();
    if qi.is_empty() {
        return Err(AnonError::NoQuasiIdentifiers);
    }
    let mut columns = Vec::new();
    let mut per_dim: Vec<Vec<f64>> = Vec::new();
    for (ix, def) in &qi {
        match def.kind {
            FeatureKind::Numeric => {
                let mut vals = Vec::with_capacity(data.n_rows());
                for row in &data.rows {
                    let v = row[*ix].as_f64().ok_or_else(|| AnonError::NonNumeric {
                        column: def.name.clone(),
                        value: row[*ix].render(),
                    })?;
                    vals.push(v);
                }
                columns.push(QiColumn { name: def.name.clone(), kind: QiKind::Numeric });
                per_dim.push(vals);
            }
            _ => {
                let rendered: Vec<String> =
                    data.rows.iter().map(|r| r[*ix].render()).collect();
                let mut order: Vec<String> = rendered.clone();
                order.sort();
                order.dedup();
                let rank: BTreeMap<&str, usize> =
                    order.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
                per_dim.push(rendered.iter().map(|v| rank[v.as_str()] as f64).collect());
                columns.push(QiColumn { name: def.name.clone(), kind: QiKind::Categorical { order } });
            }
        }
    }
    let values: Vec<Vec<f64>> = (0..data.n_rows())
        .map(|r| per_dim.iter().map(|col| col[r]).collect())
        .collect();
    Ok(QiMatrix { columns, values })
}

/// The feasible cut position closest to the median of the sorted values,
/// if any: `p` rows go left, and both sides keep at least k. Cuts only
/// fall between distinct values so equal values never straddle a boundary.
fn median_feasible_cut(sorted: &[f64], k: usize) -> Option<(usize, f64)> {
    let n = sorted.len();
    if n < 2 * k {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    let mut best_dist = usize::MAX;
    for p in k..=(n - k) {
        if p < n && sorted[p - 1] == sorted[p] {
            continue;
        }
        // Distance from the middle in half-row units; ascending iteration
        // keeps the smaller p on ties.
        let dist = (2 * p).abs_diff(n);
        if dist < best_dist {
            best_dist = dist;
            best = Some((p, sorted[p - 1]));
        }
    }
    best
}

fn build_tree(
    matrix: &QiMatrix,
    rows: Vec<usize>,
    k: usize,
    global_span: &[(f64, f64)],
    regions: &mut Vec<Region>,
) -> Node {
    let n_dims = matrix.columns.len();
    // Dimensions by widest normalized range, widest first; ties keep the
    // lower dimension index so fitting is order-deterministic.
    let mut ranked: Vec<(usize, f64)> = (0..n_dims)
        .map(|d| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &r in &rows {
                lo = lo.min(matrix.values[r][d]);
                hi = hi.max(matrix.values[r][d]);
            }
            let (glo, ghi) = global_span[d];
            let denom = ghi - glo;
            let span = if denom > 0.0 { (hi - lo) / denom } else { 0.0 };
            (d, span)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

    for (dim, span) in ranked {
        if span <= 0.0 {
            break;
        }
        let mut sorted: Vec<f64> = rows.iter().map(|&r| matrix.values[r][dim]).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if let Some((_, cut)) = median_feasible_cut(&sorted, k) {
            let (mut left, mut right) = (Vec::new(), Vec::new());
            for &r in &rows {
                if matrix.values[r][dim] <= cut {
                    left.push(r);
                } else {
                    right.push(r);
                }
            }
            let (left_rows, right_rows) = (left.len(), right.len());
            let left = Box::new(build_tree(matrix, left, k, global_span, regions));
            let right = Box::new(build_tree(matrix, right, k, global_span, regions));
            return Node::Split { dim, cut, left_rows, right_rows, left, right };
        }
    }

    // No dimension can be split further: emit a region labeled by the
    // observed spans of its rows.
    let labels = (0..n_dims)
        .map(|d| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &r in &rows {
                lo = lo.min(matrix.values[r][d]);
                hi = hi.max(matrix.values[r][d]);
            }
            match &matrix.columns[d].kind {
                QiKind::Numeric => {
                    if lo == hi {
                        Cell::Num(lo).render()
                    } else {
                        format!("[{}..{}]", Cell::Num(lo).render(), Cell::Num(hi).render())
                    }
                }
                QiKind::Categorical { order } => {
                    let (a, b) = (lo as usize, hi as usize);
                    if a == b {
                        order[a].clone()
                    } else {
                        order[a..=b].join("|")
                    }
                }
            }
        })
        .collect();
    regions.push(Region { labels });
    Node::Leaf { region: regions.len() - 1 }
}

/// Fits a generalization on a training split. Fails when the split holds
/// fewer than k rows.
pub fn fit_generalization(train: &Dataset, k: u64) -> Result<GeneralizationMap, AnonError> {
    if (train.n_rows() as u64) < k {
        return Err(AnonError::InfeasibleK { k, n_rows: train.n_rows() });
    }
    let matrix = extract_matrix(train)?;
    let global_span: Vec<(f64, f64)> = (0..matrix.columns.len())
        .map(|d| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for row in &matrix.values {
                lo = lo.min(row[d]);
                hi = hi.max(row[d]);
            }
            (lo, hi)
        })
        .collect();
    let mut regions = Vec::new();
    let root = build_tree(
        &matrix,
        (0..train.n_rows()).collect(),
        k as usize,
        &global_span,
        &mut regions,
    );
    Ok(GeneralizationMap { k, columns: matrix.columns, root, regions })
}

impl GeneralizationMap {
    pub fn quasi_identifier_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    /// Routes one row (as per-dimension scale values; `None` marks an
    /// unseen categorical value) to its region.
    fn route(&self, scaled: &[Option<f64>]) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { region } => return *region,
                Node::Split { dim, cut, left_rows, right_rows, left, right } => {
                    let side = match scaled[*dim] {
                        Some(v) => {
                            if v <= *cut {
                                CutSide::Left
                            } else {
                                CutSide::Right
                            }
                        }
                        // Unseen value: follow the larger side, ties left.
                        None => {
                            if right_rows > left_rows {
                                CutSide::Right
                            } else {
                                CutSide::Left
                            }
                        }
                    };
                    node = match side {
                        CutSide::Left => left,
                        CutSide::Right => right,
                    };
                }
            }
        }
    }

    /// Rewrites the dataset's quasi-identifier cells with region labels.
    /// Numeric quasi-identifiers become categorical columns, since range
    /// labels are no longer numbers.
    pub fn apply(&self, data: &mut Dataset) -> Result<(), AnonError> {
        let mut col_ix = Vec::with_capacity(self.columns.len());
        for c in &self.columns {
            col_ix.push(
                data.feature_index(&c.name)
                    .map_err(|_| AnonError::MissingColumn(c.name.clone()))?,
            );
        }
        for row in &mut data.rows {
            let scaled: Vec<Option<f64>> = self
                .columns
                .iter()
                .zip(&col_ix)
                .map(|(c, &ix)| match &c.kind {
                    QiKind::Numeric => row[ix].as_f64(),
                    QiKind::Categorical { order } => {
                        let v = row[ix].render();
                        order.binary_search(&v).ok().map(|r| r as f64)
                    }
                })
                .collect();
            let region = &self.regions[self.route(&scaled)];
            for (label, &ix) in region.labels.iter().zip(&col_ix) {
                row[ix] = Cell::Text(label.clone());
            }
        }
        for (c, &ix) in self.columns.iter().zip(&col_ix) {
            if matches!(c.kind, QiKind::Numeric) {
                data.features[ix].kind = FeatureKind::Categorical;
            }
            data.features[ix].domain = None;
        }
        data.push_provenance(format!(
            "k-anonymized (k={}) over: {}",
            self.k,
            self.quasi_identifier_names().join(", ")
        ));
        Ok(())
    }
}

/// The smallest equivalence-class size over quasi-identifier value tuples —
/// the k the dataset actually provides. Empty datasets report 0.
pub fn verify_k_anonymity(data: &Dataset, qi_names: &[String]) -> u64 {
    if data.n_rows() == 0 {
        return 0;
    }
    let ixs: Vec<usize> = qi_names
        .iter()
        .filter_map(|n| data.feature_index(n).ok())
        .collect();
    let mut counts: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    for row in &data.rows {
        let key: Vec<String> = ixs.iter().map(|&i| row[i].render()).collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    counts.values().copied().min().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{FeatureDef, FeatureRole};

    fn one_numeric_qi(values: &[f64]) -> Dataset {
        let mut d = Dataset::new(vec![
            FeatureDef::new("score", FeatureKind::Numeric, FeatureRole::QuasiIdentifier),
            FeatureDef::new("y", FeatureKind::Categorical, FeatureRole::Label),
        ]);
        for v in values {
            d.rows.push(vec![Cell::Num(*v), Cell::Text("0".into())]);
        }
        d
    }

    fn one_categorical_qi(values: &[&str]) -> Dataset {
        let mut d = Dataset::new(vec![
            FeatureDef::new("city", FeatureKind::Categorical, FeatureRole::QuasiIdentifier),
            FeatureDef::new("y", FeatureKind::Categorical, FeatureRole::Label),
        ]);
        for v in values {
            d.rows.push(vec![Cell::Text(v.to_string()), Cell::Text("0".into())]);
        }
        d
    }

    #[test]
    fn two_clusters_split_at_the_gap() {
        let mut d = one_numeric_qi(&[1.0, 2.0, 3.0, 10.0, 11.0, 12.0]);
        let map = fit_generalization(&d, 2).unwrap();
        map.apply(&mut d).unwrap();
        let col = d.column_strings("score").unwrap();
        assert_eq!(col, vec!["[1..3]", "[1..3]", "[1..3]", "[10..12]", "[10..12]", "[10..12]"]);
        assert_eq!(verify_k_anonymity(&d, &["score".into()]), 3);
        // The numeric column now holds range labels, so its kind changed.
        assert_eq!(d.feature("score").unwrap().1.kind, FeatureKind::Categorical);
    }

    #[test]
    fn single_valued_regions_keep_their_value() {
        let mut d = one_numeric_qi(&[5.0, 5.0, 5.0, 9.0, 9.0, 9.0]);
        let map = fit_generalization(&d, 3).unwrap();
        map.apply(&mut d).unwrap();
        let col = d.column_strings("score").unwrap();
        assert_eq!(col, vec!["5", "5", "5", "9", "9", "9"]);
    }

    #[test]
    fn infeasible_k_is_rejected() {
        let d = one_numeric_qi(&[1.0, 2.0, 3.0]);
        let err = fit_generalization(&d, 7).unwrap_err();
        assert_eq!(err, AnonError::InfeasibleK { k: 7, n_rows: 3 });
    }

    #[test]
    fn fit_is_deterministic() {
        let d = one_numeric_qi(&[4.0, 8.0, 15.0, 16.0, 23.0, 42.0, 7.0, 9.0]);
        let a = fit_generalization(&d, 2).unwrap();
        let b = fit_generalization(&d, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn categorical_splits_cover_contiguous_sorted_runs() {
        let mut d = one_categorical_qi(&["A", "A", "B", "B", "C", "C", "C", "C"]);
        let map = fit_generalization(&d, 2).unwrap();
        map.apply(&mut d).unwrap();
        let col = d.column_strings("city").unwrap();
        assert_eq!(col, vec!["A", "A", "B", "B", "C", "C", "C", "C"]);
        assert_eq!(verify_k_anonymity(&d, &["city".into()]), 2);
    }

    #[test]
    fn unseen_categorical_value_follows_the_larger_side() {
        let train = one_categorical_qi(&["A", "A", "B", "B", "C", "C", "C", "C"]);
        let map = fit_generalization(&train, 2).unwrap();
        // Root splits {A,B} | {C} at 4 vs 4 rows; the tie routes left, then
        // {A} | {B} ties again and lands at A.
        let mut held_out = one_categorical_qi(&["Z"]);
        map.apply(&mut held_out).unwrap();
        assert_eq!(held_out.column_strings("city").unwrap(), vec!["A"]);
    }

    #[test]
    fn held_out_rows_get_train_region_labels() {
        let train = one_numeric_qi(&[1.0, 2.0, 3.0, 10.0, 11.0, 12.0]);
        let map = fit_generalization(&train, 3).unwrap();
        let mut held_out = one_numeric_qi(&[2.5, 100.0]);
        map.apply(&mut held_out).unwrap();
        assert_eq!(held_out.column_strings("score").unwrap(), vec!["[1..3]", "[10..12]"]);
    }

    #[test]
    fn anonymized_synthetic_data_meets_its_k() {
        let config = crate::synthgen::GenConfig { n_rows: 400, ..Default::default() };
        let base = crate::synthgen::generate(&config).unwrap();
        for k in [2u64, 5, 7] {
            let mut d = base.clone();
            let map = fit_generalization(&d, k).unwrap();
            map.apply(&mut d).unwrap();
            let achieved = verify_k_anonymity(&d, &map.quasi_identifier_names());
            assert!(achieved >= k, "k={k} achieved={achieved}");
        }
    }

    proptest::proptest! {
        #[test]
        fn every_fit_meets_its_k(
            values in proptest::collection::vec(0u32..40, 10..60),
            k in 2usize..6,
        ) {
            let mut d = one_numeric_qi(&values.iter().map(|v| *v as f64).collect::<Vec<_>>());
            if d.n_rows() >= k {
                let map = fit_generalization(&d, k as u64).unwrap();
                map.apply(&mut d).unwrap();
                let achieved = verify_k_anonymity(&d, &["score".to_string()]);
                proptest::prop_assert!(achieved >= k as u64, "k={} achieved={}", k, achieved);
            }
        }
    }
}
