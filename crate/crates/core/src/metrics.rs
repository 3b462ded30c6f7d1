//! Evaluation metrics: predictive performance, conditional demographic
//! disparity, data-usage share, and the qualitative risk/explainability
//! categories.

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, Explainability, ModelFamily, RiskCategory};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricError {
    #[error("inputs have mismatched lengths: {0}")]
    LengthMismatch(String),
    #[error("no rows to evaluate")]
    Empty,
    #[error("stratum column missing: {0:?}")]
    MissingColumn(String),
    #[error("stratum column {0:?} is numeric but holds non-numeric cells")]
    NonNumericStratum(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

pub fn confusion(labels: &[u8], preds: &[u8]) -> Result<Confusion, MetricError> {
    if labels.len() != preds.len() {
        return Err(MetricError::LengthMismatch(format!(
            "{} labels vs {} predictions",
            labels.len(),
            preds.len()
        )));
    }
    if labels.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut c = Confusion { tp: 0, fp: 0, tn: 0, fn_: 0 };
    for (&y, &p) in labels.iter().zip(preds) {
        match (y, p) {
            (1, 1) => c.tp += 1,
            (0, 1) => c.fp += 1,
            (0, 0) => c.tn += 1,
            (1, 0) => c.fn_ += 1,
            _ => unreachable!("labels and predictions are binary"),
        }
    }
    Ok(c)
}

/// Standard panel. Ratios with empty denominators come back as `None`
/// with a note in `flags` instead of silently reporting 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfPanel {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub flags: Vec<String>,
}

pub fn perf_panel(labels: &[u8], preds: &[u8]) -> Result<PerfPanel, MetricError> {
    let c = confusion(labels, preds)?;
    let n = (c.tp + c.fp + c.tn + c.fn_) as f64;
    let mut flags = Vec::new();
    let accuracy = (c.tp + c.tn) as f64 / n;
    let precision = if c.tp + c.fp > 0 {
        Some(c.tp as f64 / (c.tp + c.fp) as f64)
    } else {
        flags.push("precision undefined: no predicted positives".to_string());
        None
    };
    let recall = if c.tp + c.fn_ > 0 {
        Some(c.tp as f64 / (c.tp + c.fn_) as f64)
    } else {
        flags.push("recall undefined: no positive labels".to_string());
        None
    };
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => {
            flags.push("f1 undefined: precision and recall both zero".to_string());
            None
        }
        _ => None,
    };
    Ok(PerfPanel { accuracy, precision, recall, f1, flags })
}

/// Disparity within one stratum: difference between the protected group's
/// share of adverse (predicted-1) decisions and its share of favorable
/// (predicted-0) decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumDisparity {
    pub key: String,
    pub n: usize,
    pub dd: f64,
    /// One side (all-adverse or all-favorable) was empty; dd counts as 0.
    pub empty_side: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CddResult {
    /// Stratum-size-weighted mean of per-stratum disparities.
    pub cdd: f64,
    pub strata: Vec<StratumDisparity>,
    pub flags: Vec<String>,
}

/// Conditional demographic disparity of a decision vector, stratified by
/// precomputed stratum keys. `unprivileged` marks membership of the group
/// whose over-representation among adverse decisions counts as positive
/// disparity.
pub fn cdd(
    preds: &[u8],
    unprivileged: &[bool],
    strata_keys: &[String],
) -> Result<CddResult, MetricError> {
    if preds.len() != unprivileged.len() || preds.len() != strata_keys.len() {
        return Err(MetricError::LengthMismatch(format!(
            "{} predictions, {} group marks, {} stratum keys",
            preds.len(),
            unprivileged.len(),
            strata_keys.len()
        )));
    }
    if preds.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut grouped: std::collections::BTreeMap<&String, Vec<usize>> =
        std::collections::BTreeMap::new();
    for (i, key) in strata_keys.iter().enumerate() {
        grouped.entry(key).or_default().push(i);
    }

    let n_total = preds.len() as f64;
    let mut out = CddResult { cdd: 0.0, strata: Vec::new(), flags: Vec::new() };
    for key in grouped.keys() {
        let rows = &grouped[key];
        let (mut adverse, mut adverse_unpriv, mut favorable, mut favorable_unpriv) =
            (0usize, 0usize, 0usize, 0usize);
        for &i in rows {
            if preds[i] == 1 {
                adverse += 1;
                adverse_unpriv += usize::from(unprivileged[i]);
            } else {
                favorable += 1;
                favorable_unpriv += usize::from(unprivileged[i]);
            }
        }
        let empty_side = adverse == 0 || favorable == 0;
        let dd = if empty_side {
            0.0
        } else {
            adverse_unpriv as f64 / adverse as f64 - favorable_unpriv as f64 / favorable as f64
        };
        if empty_side {
            out.flags.push(format!(
                "stratum {key:?}: one decision side is empty; its disparity counts as 0"
            ));
        }
        out.cdd += rows.len() as f64 / n_total * dd;
        out.strata.push(StratumDisparity { key: (*key).clone(), n: rows.len(), dd, empty_side });
    }
    Ok(out)
}

/// Builds one stratum key per row from the named columns of the evaluation
/// split. Numeric columns are binned into quintiles (breaks from this same
/// split); text columns — including generalized range labels — contribute
/// their value verbatim. Parts join with `" | "`.
pub fn build_strata_keys(
    eval: &Dataset,
    strata_features: &[String],
) -> Result<Vec<String>, MetricError> {
    if eval.n_rows() == 0 {
        return Err(MetricError::Empty);
    }
    let mut per_feature: Vec<Vec<String>> = Vec::new();
    for name in strata_features {
        let (ix, def) =
            eval.feature(name).ok_or_else(|| MetricError::MissingColumn(name.clone()))?;
        if def.kind == crate::domain::FeatureKind::Numeric {
            let values: Vec<f64> = eval
                .rows
                .iter()
                .map(|r| {
                    r[ix].as_f64().ok_or_else(|| MetricError::NonNumericStratum(name.clone()))
                })
                .collect::<Result<_, _>>()?;
            let mut sorted = values.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = sorted.len();
            // Nearest-rank quintile breaks; value ≤ break_j falls in bin j.
            let breaks: Vec<f64> =
                (1..5).map(|j| sorted[(j * n).div_ceil(5) - 1]).collect();
            per_feature.push(
                values
                    .iter()
                    .map(|v| {
                        let bin = breaks.iter().filter(|b| v > b).count() + 1;
                        format!("{name} Q{bin}")
                    })
                    .collect(),
            );
        } else {
            per_feature
                .push(eval.rows.iter().map(|r| format!("{name}={}", r[ix].render())).collect());
        }
    }
    Ok((0..eval.n_rows())
        .map(|r| per_feature.iter().map(|col| col[r].clone()).collect::<Vec<_>>().join(" | "))
        .collect())
}

/// Share of the training pool actually used, as a whole percent string
/// with half-up rounding: 0.838 → "84%".
pub fn data_usage_percent(fraction: f64) -> String {
    format!("{}%", (fraction * 100.0 + 0.5).floor() as i64)
}

/// Re-identification risk of the training data embedded in a model
/// artifact. A human override wins outright; otherwise verified
/// k-anonymization earns Very Low, raw data Low, and sharing the model
/// outside the controlled environment bumps the category one step worse.
pub fn risk_category(
    anonymization_verified: bool,
    model_shared_externally: bool,
    human_override: Option<RiskCategory>,
) -> RiskCategory {
    if let Some(o) = human_override {
        return o;
    }
    let base = if anonymization_verified { RiskCategory::VeryLow } else { RiskCategory::Low };
    if model_shared_externally {
        match base {
            RiskCategory::VeryLow => RiskCategory::Low,
            RiskCategory::Low => RiskCategory::Moderate,
            RiskCategory::Moderate => RiskCategory::High,
            RiskCategory::High | RiskCategory::VeryHigh => RiskCategory::VeryHigh,
        }
    } else {
        base
    }
}

/// Fixed per-family explainability grades: logistic regression is graded
/// "Moderate" and the random forest "High". These are assumed literature
/// grades (decision paths plus ensemble voting are treated as giving the
/// forest stronger perceived interpretability), not a measured quantity.
pub fn explainability_category(family: ModelFamily) -> Explainability {
    match family {
        ModelFamily::Logreg => Explainability::Moderate,
        ModelFamily::Forest => Explainability::High,
    }
}
