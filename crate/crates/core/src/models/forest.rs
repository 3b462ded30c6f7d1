//! Random forest on raw (unencoded) features: numeric threshold splits and
//! categorical value-set splits chosen by weighted Gini impurity.
//!
//! Sample weights act through the bootstrap — each tree resamples rows with
//! probability proportional to weight — after which node statistics count
//! bootstrap instances. Per-tree RNG streams are derived from (seed, tree
//! index), so the forest is reproducible and independent of build order.
//! Categorical splits sort a node's observed values by positive rate and
//! scan prefixes, which finds the impurity-optimal binary value partition.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, FeatureKind, ForestHyper};
use crate::seeding::stream_rng;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ForestError {
    #[error("column {column:?}, row {row}: expected a number, found {value:?}")]
    NotNumeric { column: String, row: usize, value: String },
    #[error("column {column:?}, row {row}: cannot parse date {value:?}")]
    BadDate { column: String, row: usize, value: String },
    #[error("column {column:?} is missing from the dataset")]
    MissingColumn { column: String },
    #[error("no visible features to train on")]
    NoFeatures,
    #[error("no rows to train on")]
    NoRows,
}

/// How one raw column is represented inside the forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum ReprKind {
    Numeric { date: bool },
    /// Sorted distinct training values; a value's id is its index here.
    Categorical { values: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawColumn {
    name: String,
    repr: ReprKind,
}

/// One cell on the forest's internal scale. `Cat(None)` marks a value
/// never seen in training.
#[derive(Debug, Clone, Copy, PartialEq)]
enum RawValue {
    Num(f64),
    Cat(Option<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum TreeNode {
    Leaf {
        prob: f64,
        support: u32,
    },
    SplitNum {
        col: u32,
        /// Values ≤ threshold go left.
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    SplitCat {
        col: u32,
        /// Sorted value ids routed left; unseen values go right.
        left_ids: Vec<u32>,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    columns: Vec<RawColumn>,
    trees: Vec<TreeNode>,
}

fn parse_days(raw: &str) -> Option<f64> {
    let date: chrono::NaiveDate = raw.parse().ok()?;
    let epoch = chrono::NaiveDate::from_ymd_opt(1970, 1, 1).expect("epoch exists");
    Some((date - epoch).num_days() as f64)
}

/// Extracts the visible columns of a dataset onto the forest scale using
/// an existing column schema (fit) or building one (None).
fn extract_columns(data: &Dataset) -> Result<Vec<RawColumn>, ForestError> {
    let visible = data.visible_features();
    if visible.is_empty() {
        return Err(ForestError::NoFeatures);
    }
    let mut out = Vec::new();
    for def in visible {
        match def.kind {
            FeatureKind::Numeric => {
                out.push(RawColumn { name: def.name.clone(), repr: ReprKind::Numeric { date: false } })
            }
            FeatureKind::Date => {
                out.push(RawColumn { name: def.name.clone(), repr: ReprKind::Numeric { date: true } })
            }
            FeatureKind::Categorical | FeatureKind::AccountId => {
                let ix = data.feature_index(&def.name).expect("visible column exists");
                let mut values: Vec<String> = data.rows.iter().map(|r| r[ix].render()).collect();
                values.sort();
                values.dedup();
                out.push(RawColumn { name: def.name.clone(), repr: ReprKind::Categorical { values } });
            }
        }
    }
    Ok(out)
}

fn extract_matrix(
    data: &Dataset,
    columns: &[RawColumn],
) -> Result<Vec<Vec<RawValue>>, ForestError> {
    let mut col_ix = Vec::with_capacity(columns.len());
    for c in columns {
        col_ix.push(
            data.feature_index(&c.name)
                .map_err(|_| ForestError::MissingColumn { column: c.name.clone() })?,
        );
    }
    let mut matrix = vec![Vec::with_capacity(columns.len()); data.n_rows()];
    for (c, col) in columns.iter().enumerate() {
        let ix = col_ix[c];
        for (r, row) in data.rows.iter().enumerate() {
            let v = match &col.repr {
                ReprKind::Numeric { date: false } => {
                    RawValue::Num(row[ix].as_f64().ok_or_else(|| ForestError::NotNumeric {
                        column: col.name.clone(),
                        row: r + 1,
                        value: row[ix].render(),
                    })?)
                }
                ReprKind::Numeric { date: true } => {
                    let raw = row[ix].render();
                    RawValue::Num(parse_days(&raw).ok_or_else(|| ForestError::BadDate {
                        column: col.name.clone(),
                        row: r + 1,
                        value: raw,
                    })?)
                }
                ReprKind::Categorical { values } => {
                    let raw = row[ix].render();
                    RawValue::Cat(values.binary_search(&raw).ok().map(|i| i as u32))
                }
            };
            matrix[r].push(v);
        }
    }
    Ok(matrix)
}

fn gini(pos: f64, n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

#[derive(Debug, PartialEq)]
enum SplitKind {
    Num { threshold: f64 },
    Cat { left_ids: Vec<u32> },
}

#[derive(Debug, PartialEq)]
struct SplitChoice {
    dim: usize,
    kind: SplitKind,
    impurity: f64,
}

/// Best split over the sampled dimensions, by count-weighted child Gini.
/// Ties keep the earlier sampled dimension and the earlier candidate, so
/// the choice is deterministic.
fn best_split(
    matrix: &[Vec<RawValue>],
    labels: &[u8],
    instances: &[u32],
    dims: &[usize],
    min_leaf: usize,
) -> Option<SplitChoice> {
    let n = instances.len();
    let mut best: Option<SplitChoice> = None;
    for &dim in dims {
        match matrix[instances[0] as usize][dim] {
            RawValue::Num(_) => {
                let mut pairs: Vec<(f64, u8)> = instances
                    .iter()
                    .map(|&i| {
                        let RawValue::Num(v) = matrix[i as usize][dim] else {
                            unreachable!("column repr is stable")
                        };
                        (v, labels[i as usize])
                    })
                    .collect();
                pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let total_pos: f64 = pairs.iter().map(|p| p.1 as f64).sum();
                let mut left_pos = 0.0;
                for p in 1..n {
                    left_pos += pairs[p - 1].1 as f64;
                    if pairs[p - 1].0 == pairs[p].0 {
                        continue;
                    }
                    if p < min_leaf || n - p < min_leaf {
                        continue;
                    }
                    let imp = (p as f64 * gini(left_pos, p as f64)
                        + (n - p) as f64 * gini(total_pos - left_pos, (n - p) as f64))
                        / n as f64;
                    if best.as_ref().is_none_or(|b| imp < b.impurity) {
                        best = Some(SplitChoice {
                            dim,
                            kind: SplitKind::Num { threshold: pairs[p - 1].0 },
                            impurity: imp,
                        });
                    }
                }
            }
            RawValue::Cat(_) => {
                // Per value id: instance count and positives.
                let mut stats: std::collections::BTreeMap<u32, (f64, f64)> =
                    std::collections::BTreeMap::new();
                for &i in instances {
                    let RawValue::Cat(Some(id)) = matrix[i as usize][dim] else {
                        unreachable!("training values are always known")
                    };
                    let e = stats.entry(id).or_insert((0.0, 0.0));
                    e.0 += 1.0;
                    e.1 += labels[i as usize] as f64;
                }
                if stats.len() < 2 {
                    continue;
                }
                let mut ordered: Vec<(u32, f64, f64)> =
                    stats.into_iter().map(|(id, (c, p))| (id, c, p)).collect();
                // Ascending positive rate; id breaks exact-rate ties.
                ordered.sort_by(|a, b| {
                    (a.2 / a.1).partial_cmp(&(b.2 / b.1)).unwrap().then(a.0.cmp(&b.0))
                });
                let total_pos: f64 = ordered.iter().map(|o| o.2).sum();
                let (mut left_n, mut left_pos) = (0.0, 0.0);
                for j in 0..ordered.len() - 1 {
                    left_n += ordered[j].1;
                    left_pos += ordered[j].2;
                    let right_n = n as f64 - left_n;
                    if (left_n as usize) < min_leaf || (right_n as usize) < min_leaf {
                        continue;
                    }
                    let imp = (left_n * gini(left_pos, left_n)
                        + right_n * gini(total_pos - left_pos, right_n))
                        / n as f64;
                    if best.as_ref().is_none_or(|b| imp < b.impurity) {
                        let mut left_ids: Vec<u32> =
                            ordered[..=j].iter().map(|o| o.0).collect();
                        left_ids.sort_unstable();
                        best = Some(SplitChoice { dim, kind: SplitKind::Cat { left_ids }, impurity: imp });
                    }
                }
            }
        }
    }
    best
}

fn build_node(
    matrix: &[Vec<RawValue>],
    labels: &[u8],
    instances: Vec<u32>,
    depth: u32,
    hyper: &ForestHyper,
    m_features: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> TreeNode {
    let n = instances.len();
    let pos = instances.iter().filter(|&&i| labels[i as usize] == 1).count();
    let prob = pos as f64 / n as f64;
    let terminal = depth >= hyper.max_depth
        || n < 2 * hyper.min_leaf as usize
        || pos == 0
        || pos == n;
    if terminal {
        return TreeNode::Leaf { prob, support: n as u32 };
    }

    // Sample m feature indices without replacement (partial Fisher–Yates).
    let d = matrix[0].len();
    let mut dims: Vec<usize> = (0..d).collect();
    for i in 0..m_features.min(d) {
        let j = rng.gen_range(i..d);
        dims.swap(i, j);
    }
    dims.truncate(m_features.min(d));

    let parent_gini = gini(pos as f64, n as f64);
    let Some(choice) = best_split(matrix, labels, &instances, &dims, hyper.min_leaf as usize)
    else {
        return TreeNode::Leaf { prob, support: n as u32 };
    };
    if parent_gini - choice.impurity <= 1e-12 {
        return TreeNode::Leaf { prob, support: n as u32 };
    }

    let (mut left, mut right) = (Vec::new(), Vec::new());
    for &i in &instances {
        let goes_left = match (&choice.kind, matrix[i as usize][choice.dim]) {
            (SplitKind::Num { threshold }, RawValue::Num(v)) => v <= *threshold,
            (SplitKind::Cat { left_ids }, RawValue::Cat(Some(id))) => {
                left_ids.binary_search(&id).is_ok()
            }
            (SplitKind::Cat { .. }, RawValue::Cat(None)) => false,
            _ => unreachable!("column repr is stable"),
        };
        if goes_left {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    let left = Box::new(build_node(matrix, labels, left, depth + 1, hyper, m_features, rng));
    let right = Box::new(build_node(matrix, labels, right, depth + 1, hyper, m_features, rng));
    match choice.kind {
        SplitKind::Num { threshold } => {
            TreeNode::SplitNum { col: choice.dim as u32, threshold, left, right }
        }
        SplitKind::Cat { left_ids } => {
            TreeNode::SplitCat { col: choice.dim as u32, left_ids, left, right }
        }
    }
}

fn route(node: &TreeNode, row: &[RawValue]) -> f64 {
    match node {
        TreeNode::Leaf { prob, .. } => *prob,
        TreeNode::SplitNum { col, threshold, left, right } => {
            let RawValue::Num(v) = row[*col as usize] else {
                unreachable!("column repr is stable")
            };
            if v <= *threshold {
                route(left, row)
            } else {
                route(right, row)
            }
        }
        TreeNode::SplitCat { col, left_ids, left, right } => match row[*col as usize] {
            RawValue::Cat(Some(id)) if left_ids.binary_search(&id).is_ok() => route(left, row),
            RawValue::Cat(_) => route(right, row),
            RawValue::Num(_) => unreachable!("column repr is stable"),
        },
    }
}

/// Trains a forest. Bootstrap draws are proportional to sample weights,
/// which is how class weighting reaches the trees.
pub fn train(
    data: &Dataset,
    labels: &[u8],
    sample_weights: &[f64],
    hyper: &ForestHyper,
    seed: u64,
) -> Result<Forest, ForestError> {
    if data.n_rows() == 0 {
        return Err(ForestError::NoRows);
    }
    assert_eq!(data.n_rows(), labels.len(), "one label per row");
    assert_eq!(data.n_rows(), sample_weights.len(), "one weight per row");
    let columns = extract_columns(data)?;
    let matrix = extract_matrix(data, &columns)?;

    let d = columns.len();
    let m_features = match hyper.feature_subsample {
        Some(fs) => ((d as f64 * fs).round() as usize).max(1),
        None => ((d as f64).sqrt().round() as usize).max(1),
    };

    let cumulative: Vec<f64> = sample_weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().expect("at least one row");

    let n = data.n_rows();
    let mut trees = Vec::with_capacity(hyper.n_trees as usize);
    for t in 0..hyper.n_trees {
        let mut rng = stream_rng(seed, t as u64);
        let instances: Vec<u32> = (0..n)
            .map(|_| {
                let target = rng.gen::<f64>() * total;
                cumulative.partition_point(|&c| c <= target) as u32
            })
            .collect();
        trees.push(build_node(&matrix, labels, instances, 0, hyper, m_features, &mut rng));
    }
    Ok(Forest { columns, trees })
}

impl Forest {
    /// Mean of per-tree leaf probabilities.
    pub fn predict_proba(&self, data: &Dataset) -> Result<Vec<f64>, ForestError> {
        let matrix = extract_matrix(data, &self.columns)?;
        Ok(matrix
            .iter()
            .map(|row| {
                self.trees.iter().map(|t| route(t, row)).sum::<f64>() / self.trees.len() as f64
            })
            .collect())
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Cell, FeatureDef, FeatureRole};

    fn numeric_dataset(xs: &[f64], ys: &[u8]) -> (Dataset, Vec<u8>) {
        let mut d = Dataset::new(vec![
            FeatureDef::new("x", FeatureKind::Numeric, FeatureRole::Feature),
            FeatureDef::new("y", FeatureKind::Categorical, FeatureRole::Label),
        ]);
        for (x, y) in xs.iter().zip(ys) {
            d.rows.push(vec![Cell::Num(*x), Cell::Text(y.to_string())]);
        }
        (d, ys.to_vec())
    }

    #[test]
    fn numeric_split_lands_on_the_class_boundary() {
        let matrix: Vec<Vec<RawValue>> =
            [1.0, 2.0, 3.0, 4.0].iter().map(|v| vec![RawValue::Num(*v)]).collect();
        let labels = [0, 0, 1, 1];
        let choice = best_split(&matrix, &labels, &[0, 1, 2, 3], &[0], 1).unwrap();
        assert_eq!(choice.dim, 0);
        assert_eq!(choice.kind, SplitKind::Num { threshold: 2.0 });
        assert_eq!(choice.impurity, 0.0);
    }

    #[test]
    fn categorical_split_partitions_by_positive_rate() {
        // A: 3 rows all positive; B: 4 rows none; C: 3 rows 2 positive.
        // Best binary partition is {B} vs {A, C}.
        let ids = [0, 0, 0, 1, 1, 1, 1, 2, 2, 2];
        let labels = [1, 1, 1, 0, 0, 0, 0, 1, 1, 0];
        let matrix: Vec<Vec<RawValue>> =
            ids.iter().map(|i| vec![RawValue::Cat(Some(*i))]).collect();
        let instances: Vec<u32> = (0..10).collect();
        let choice = best_split(&matrix, &labels, &instances, &[0], 1).unwrap();
        assert_eq!(choice.kind, SplitKind::Cat { left_ids: vec![1] });
        let expected = (4.0 * 0.0 + 6.0 * gini(5.0, 6.0)) / 10.0;
        assert!((choice.impurity - expected).abs() < 1e-12);
    }

    #[test]
    fn pure_labels_collapse_to_a_single_leaf() {
        let (d, labels) = numeric_dataset(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 0, 0]);
        let hyper = ForestHyper { n_trees: 5, max_depth: 4, min_leaf: 1, feature_subsample: None };
        let f = train(&d, &labels, &[1.0; 4], &hyper, 1).unwrap();
        for t in &f.trees {
            assert!(matches!(t, TreeNode::Leaf { prob, .. } if *prob == 0.0));
        }
        assert_eq!(f.predict_proba(&d).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn forest_probability_is_the_mean_of_tree_probabilities() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let ys: Vec<u8> = (0..40).map(|i| u8::from(i >= 20)).collect();
        let (d, labels) = numeric_dataset(&xs, &ys);
        let hyper = ForestHyper { n_trees: 7, max_depth: 3, min_leaf: 2, feature_subsample: None };
        let f = train(&d, &labels, &[1.0; 40], &hyper, 3).unwrap();
        let probs = f.predict_proba(&d).unwrap();
        let matrix = extract_matrix(&d, &f.columns).unwrap();
        for (r, row) in matrix.iter().enumerate() {
            let mean =
                f.trees.iter().map(|t| route(t, row)).sum::<f64>() / f.trees.len() as f64;
            assert_eq!(probs[r], mean);
        }
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let xs: Vec<f64> = (0..60).map(|i| (i * 37 % 60) as f64).collect();
        let ys: Vec<u8> = (0..60).map(|i| u8::from(i % 3 == 0)).collect();
        let (d, labels) = numeric_dataset(&xs, &ys);
        let hyper = ForestHyper::default();
        let a = train(&d, &labels, &[1.0; 60], &hyper, 42).unwrap();
        let b = train(&d, &labels, &[1.0; 60], &hyper, 42).unwrap();
        assert_eq!(a, b);
        let c = train(&d, &labels, &[1.0; 60], &hyper, 43).unwrap();
        assert_ne!(a, c);
    }

    fn max_depth_of(node: &TreeNode) -> u32 {
        match node {
            TreeNode::Leaf { .. } => 0,
            TreeNode::SplitNum { left, right, .. } | TreeNode::SplitCat { left, right, .. } => {
                1 + max_depth_of(left).max(max_depth_of(right))
            }
        }
    }

    fn min_support_of(node: &TreeNode) -> u32 {
        match node {
            TreeNode::Leaf { support, .. } => *support,
            TreeNode::SplitNum { left, right, .. } | TreeNode::SplitCat { left, right, .. } => {
                min_support_of(left).min(min_support_of(right))
            }
        }
    }

    #[test]
    fn depth_and_leaf_support_respect_hyperparameters() {
        let config = crate::synthgen::GenConfig { n_rows: 300, ..Default::default() };
        let d = crate::synthgen::generate(&config).unwrap();
        let labels = d.labels().unwrap();
        let hyper = ForestHyper { n_trees: 10, max_depth: 4, min_leaf: 5, feature_subsample: None };
        let f = train(&d, &labels, &vec![1.0; 300], &hyper, 7).unwrap();
        for t in &f.trees {
            assert!(max_depth_of(t) <= 4);
            assert!(min_support_of(t) >= 5);
        }
    }

    #[test]
    fn unseen_categorical_values_route_right_without_panicking() {
        let mut d = Dataset::new(vec![
            FeatureDef::new("c", FeatureKind::Categorical, FeatureRole::Feature),
            FeatureDef::new("y", FeatureKind::Categorical, FeatureRole::Label),
        ]);
        for (v, y) in [("a", 0), ("a", 0), ("a", 0), ("b", 1), ("b", 1), ("b", 1)] {
            d.rows.push(vec![Cell::Text(v.into()), Cell::Text(y.to_string())]);
        }
        let labels = d.labels().unwrap();
        let hyper = ForestHyper { n_trees : 3, max_depth: 2, min_leaf: 1, feature_subsample: Some(1.0) };
        let f = train(&d, &labels, &[1.0; 6], &hyper, 5).unwrap();
        let mut held_out = d.clone();
        held_out.rows[0][0] = Cell::Text("zz".into());
        let probs = f.predict_proba(&held_out).unwrap();
        assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn separates_synthetic_positives_from_negatives() {
        let config = crate::synthgen::GenConfig { n_rows: 500, ..Default::default() };
        let d = crate::synthgen::generate(&config).unwrap();
        let labels = d.labels().unwrap();
        let hyper = ForestHyper { n_trees: 30, max_depth: 8, min_leaf: 5, feature_subsample: None };
        let f = train(&d, &labels, &vec![1.0; 500], &hyper, 11).unwrap();
        let probs = f.predict_proba(&d).unwrap();
        let mean = |cls: u8| {
            let vals: Vec<f64> = probs
                .iter()
                .zip(&labels)
                .filter(|(_, l)| **l == cls)
                .map(|(p, _)| *p)
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        assert!(mean(1) > mean(0) + 0.1, "positives {} vs negatives {}", mean(1), mean(0));
    }

    #[test]
    fn upweighting_positives_raises_their_predicted_probability() {
        let config = crate::synthgen::GenConfig { n_rows: 400, ..Default::default() };
        let d = crate::synthgen::generate(&config).unwrap();
        let labels = d.labels().unwrap();
        let hyper = ForestHyper { n_trees: 20, max_depth: 6, min_leaf: 5, feature_subsample: None };
        let plain = train(&d, &labels, &vec![1.0; 400], &hyper, 9).unwrap();
        let weights: Vec<f64> =
            labels.iter().map(|&l| if l == 1 { 8.0 } else { 1.0 }).collect();
        let boosted = train(&d, &labels, &weights, &hyper, 9).unwrap();
        let mean = |f: &Forest| {
            f.predict_proba(&d).unwrap().iter().sum::<f64>() / 400.0
        };
        assert!(mean(&boosted) > mean(&plain));
    }
}
