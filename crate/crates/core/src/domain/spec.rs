//! Declarative run specification: legal requirements, candidate
//! operationalizations, compatibility rules, and selection policy, plus the
//! validation pass that turns raw JSON into a trustworthy [`RunSpec`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;

/// How a requirement's outcome is measured on a trained model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluationKind {
    PerfPanel,
    Cdd,
    #[serde(rename = "data-usage+k-anon")]
    DataUsageKAnon,
    RiskCategory,
    ExplainabilityCategory,
    Recall,
}

/// A legal requirement the workflow must account for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegalRequirement {
    pub id: String,
    pub name: String,
    pub evaluation: EvaluationKind,
}

/// Concrete technical measures a requirement can be translated into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperationalizationKind {
    FeatureDrop,
    RejectOption,
    DataMinimization,
    KAnonymity,
    NoOp,
    ModelFamily,
    ClassWeighting,
}

/// Trainable model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    Logreg,
    Forest,
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelFamily::Logreg => f.write_str("logreg"),
            ModelFamily::Forest => f.write_str("forest"),
        }
    }
}

/// Positive-class weighting policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum WeightPolicy {
    /// Positive weight = (#negatives / #positives).
    Balanced,
    Fixed { positive_weight: f64 },
}

/// One candidate operationalization of a requirement.
///
/// `index` is 1-based and unique within the requirement. `extends` points at
/// a lower index of the same requirement whose measures this one builds on
/// ("in addition to"); the pipeline applies the whole chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operationalization {
    pub id: String,
    pub requirement: String,
    pub index: u32,
    pub kind: OperationalizationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extends: Option<u32>,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub params: serde_json::Map<String, serde_json::Value>,
}

impl Operationalization {
    fn num(&self, key: &str) -> Result<Option<f64>, String> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| format!("params.{key} must be a number")),
        }
    }

    fn str_list(&self, key: &str) -> Result<Option<Vec<String>>, String> {
        match self.params.get(key) {
            None => Ok(None),
            Some(serde_json::Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| format!("params.{key} must be an array of strings"))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(_) => Err(format!("params.{key} must be an array of strings")),
        }
    }

    /// Features removed from model visibility. Required for `feature-drop`,
    /// optional for `reject-option` (which may bundle a drop).
    pub fn drop_list(&self) -> Result<Vec<String>, String> {
        match self.kind {
            OperationalizationKind::FeatureDrop => {
                let list = self
                    .str_list("features")?
                    .ok_or_else(|| "params.features is required".to_string())?;
                if list.is_empty() {
                    return Err("params.features must not be empty".to_string());
                }
                Ok(list)
            }
            OperationalizationKind::RejectOption => Ok(self.str_list("drop")?.unwrap_or_default()),
            _ => Ok(Vec::new()),
        }
    }

    /// Anonymity parameter for `k-anonymity` operationalizations.
    pub fn k(&self) -> Result<u64, String> {
        let v = self
            .params
            .get("k")
            .ok_or_else(|| "params.k is required".to_string())?;
        let k = v
            .as_u64()
            .ok_or_else(|| "params.k must be an integer".to_string())?;
        if k < 2 {
            return Err("params.k must be ≥ 2".to_string());
        }
        Ok(k)
    }

    /// Per-sample loss-slope threshold for `data-minimization`. Always
    /// strictly negative: training stops once additional data improves
    /// validation loss slower than this rate.
    pub fn stopping_threshold(&self) -> Result<f64, String> {
        let t = self
            .num("stopping_threshold")?
            .ok_or_else(|| "params.stopping_threshold is required".to_string())?;
        if !t.is_finite() || t >= 0.0 {
            return Err("params.stopping_threshold must be a finite negative number".to_string());
        }
        Ok(t)
    }

    pub fn batch_size(&self) -> Result<usize, String> {
        match self.num("batch_size")? {
            None => Ok(500),
            Some(b) if b.fract() == 0.0 && b >= 1.0 => Ok(b as usize),
            Some(_) => Err("params.batch_size must be a positive integer".to_string()),
        }
    }

    /// Fixed confidence ceiling for `reject-option`. `None` means the
    /// pipeline tunes it on the validation split.
    pub fn theta(&self) -> Result<Option<f64>, String> {
        match self.num("theta")? {
            None => Ok(None),
            Some(t) if t > 0.5 && t <= 1.0 => Ok(Some(t)),
            Some(_) => Err("params.theta must lie in (0.5, 1]".to_string()),
        }
    }

    /// Maximum tolerated recall drop while tuning the reject-option ceiling.
    pub fn epsilon(&self) -> Result<Option<f64>, String> {
        match self.num("epsilon")? {
            None => Ok(None),
            Some(e) if e >= 0.0 && e.is_finite() => Ok(Some(e)),
            Some(_) => Err("params.epsilon must be ≥ 0".to_string()),
        }
    }

    pub fn family(&self) -> Result<ModelFamily, String> {
        let v = self
            .params
            .get("family")
            .ok_or_else(|| "params.family is required".to_string())?;
        serde_json::from_value(v.clone())
            .map_err(|_| format!("params.family must be one of \"logreg\", \"forest\", got {v}"))
    }

    pub fn weight_policy(&self) -> Result<WeightPolicy, String> {
        let policy: WeightPolicy =
            serde_json::from_value(serde_json::Value::Object(self.params.clone()))
                .map_err(|e| format!("params must describe a weighting policy: {e}"))?;
        if let WeightPolicy::Fixed { positive_weight } = policy {
            if !positive_weight.is_finite() || positive_weight <= 0.0 {
                return Err("params.positive_weight must be > 0".to_string());
            }
        }
        Ok(policy)
    }

    /// Validates that `params` is complete and in range for `kind`.
    fn check_params(&self) -> Result<(), String> {
        match self.kind {
            OperationalizationKind::FeatureDrop => self.drop_list().map(|_| ()),
            OperationalizationKind::RejectOption => {
                self.drop_list()?;
                self.theta()?;
                self.epsilon().map(|_| ())
            }
            OperationalizationKind::DataMinimization => {
                self.stopping_threshold()?;
                self.batch_size().map(|_| ())
            }
            OperationalizationKind::KAnonymity => self.k().map(|_| ()),
            OperationalizationKind::NoOp => Ok(()),
            OperationalizationKind::ModelFamily => self.family().map(|_| ()),
            OperationalizationKind::ClassWeighting => self.weight_policy().map(|_| ()),
        }
    }
}

/// Reference to one operationalization: requirement id plus 1-based index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpRef {
    pub requirement: String,
    pub index: u32,
}

impl fmt::Display for OpRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.requirement, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    /// Choosing the antecedent forces the consequent.
    Implies,
    /// Choosing the antecedent forbids the consequent.
    Excludes,
}

/// Cross-requirement compatibility constraint on operationalization choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityRule {
    pub kind: RuleKind,
    pub antecedent: OpRef,
    pub consequent: OpRef,
}

impl fmt::Display for CompatibilityRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verb = match self.kind {
            RuleKind::Implies => "implies",
            RuleKind::Excludes => "excludes",
        };
        write!(f, "{} {} {}", self.antecedent, verb, self.consequent)
    }
}

/// Train/validation/test fractions. Must be positive and sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

/// Qualitative re-identification risk scale (lower is better).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskCategory {
    VeryLow,
    Low,
    Moderate,
    High,
    VeryHigh,
}

impl RiskCategory {
    pub fn rank(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for RiskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RiskCategory::VeryLow => "Very Low",
            RiskCategory::Low => "Low",
            RiskCategory::Moderate => "Moderate",
            RiskCategory::High => "High",
            RiskCategory::VeryHigh => "Very High",
        };
        f.write_str(s)
    }
}

/// Qualitative explainability scale (higher is better).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Explainability {
    Low,
    Moderate,
    High,
}

impl Explainability {
    pub fn rank(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for Explainability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Explainability::Low => "Low",
            Explainability::Moderate => "Moderate",
            Explainability::High => "High",
        };
        f.write_str(s)
    }
}

/// Evaluation dimensions a selection policy can constrain or rank by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dimension {
    Accuracy,
    Precision,
    F1,
    Recall,
    DataUsed,
    KAnonymity,
    AbsCdd,
    Risk,
    Explainability,
}

impl Dimension {
    pub const ALL: [Dimension; 9] = [
        Dimension::Accuracy,
        Dimension::Precision,
        Dimension::F1,
        Dimension::Recall,
        Dimension::DataUsed,
        Dimension::KAnonymity,
        Dimension::AbsCdd,
        Dimension::Risk,
        Dimension::Explainability,
    ];

    /// The direction that improves a dimension when nothing else is said.
    pub fn natural_direction(self) -> RankDirection {
        match self {
            Dimension::Accuracy
            | Dimension::Precision
            | Dimension::F1
            | Dimension::Recall
            | Dimension::KAnonymity
            | Dimension::Explainability => RankDirection::Maximize,
            Dimension::DataUsed | Dimension::AbsCdd | Dimension::Risk => RankDirection::Minimize,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Accuracy => "accuracy",
            Dimension::Precision => "precision",
            Dimension::F1 => "f1",
            Dimension::Recall => "recall",
            Dimension::DataUsed => "data-used",
            Dimension::KAnonymity => "k-anonymity",
            Dimension::AbsCdd => "abs-cdd",
            Dimension::Risk => "risk",
            Dimension::Explainability => "explainability",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankDirection {
    Maximize,
    Minimize,
}

/// Hard feasibility bound on one dimension. Exactly the fields that make
/// sense for the dimension's type may be set: `min`/`max` for quantitative
/// dimensions, `required` for the k-anonymity flag, `at_most` for risk,
/// `at_least` for explainability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub dimension: Dimension,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at_most: Option<RiskCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at_least: Option<Explainability>,
}

impl Threshold {
    fn check(&self) -> Result<(), String> {
        let quantitative = matches!(
            self.dimension,
            Dimension::Accuracy
                | Dimension::Precision
                | Dimension::F1
                | Dimension::Recall
                | Dimension::DataUsed
                | Dimension::AbsCdd
        );
        match self.dimension {
            _ if quantitative => {
                if self.min.is_none() && self.max.is_none() {
                    return Err(format!("threshold on {} needs min or max", self.dimension));
                }
                if self.required.is_some() || self.at_most.is_some() || self.at_least.is_some() {
                    return Err(format!("threshold on {} only supports min/max", self.dimension));
                }
            }
            Dimension::KAnonymity => {
                if self.required.is_none() {
                    return Err("threshold on k-anonymity needs required: true".to_string());
                }
            }
            Dimension::Risk => {
                if self.at_most.is_none() {
                    return Err("threshold on risk needs at_most".to_string());
                }
            }
            Dimension::Explainability => {
                if self.at_least.is_none() {
                    return Err("threshold on explainability needs at_least".to_string());
                }
            }
            _ => unreachable!(),
        }
        for b in [self.min, self.max].into_iter().flatten() {
            if !b.is_finite() {
                return Err(format!("threshold bound on {} must be finite", self.dimension));
            }
        }
        Ok(())
    }

    /// One-line description used in reports and threshold matrices.
    pub fn describe(&self) -> String {
        if let Some(m) = self.min {
            return format!("{} ≥ {m}", self.dimension);
        }
        if let Some(m) = self.max {
            return format!("{} ≤ {m}", self.dimension);
        }
        if self.required == Some(true) {
            return format!("{} required", self.dimension);
        }
        if let Some(c) = self.at_most {
            return format!("{} ≤ {c}", self.dimension);
        }
        if let Some(c) = self.at_least {
            return format!("{} ≥ {c}", self.dimension);
        }
        format!("{} (no bound)", self.dimension)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedDimension {
    pub dimension: Dimension,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<RankDirection>,
}

/// How feasible candidates are ordered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Ranking {
    /// Compare dimension by dimension, in order; first strict difference wins.
    Lexicographic { dimensions: Vec<Dimension> },
    /// Single scalar score from weighted, direction-signed normalized values.
    Weighted { weights: Vec<WeightedDimension> },
}

/// Declarative model-selection policy: hard thresholds plus a ranking rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPolicy {
    #[serde(default)]
    pub thresholds: Vec<Threshold>,
    pub ranking: Ranking,
}

impl SelectionPolicy {
    /// Checks a policy in isolation (also used for standalone policy files).
    /// Error paths are relative to the policy object.
    pub fn validate(&self) -> Result<(), SpecError> {
        for (i, t) in self.thresholds.iter().enumerate() {
            t.check().map_err(|m| SpecError::at(format!("thresholds[{i}]"), m))?;
        }
        match &self.ranking {
            Ranking::Lexicographic { dimensions } => {
                if dimensions.is_empty() {
                    return Err(SpecError::at(
                        "ranking.dimensions",
                        "must name at least one dimension",
                    ));
                }
                let mut seen = BTreeSet::new();
                for d in dimensions {
                    if !seen.insert(*d) {
                        return Err(SpecError::at(
                            "ranking.dimensions",
                            format!("dimension {d} listed twice"),
                        ));
                    }
                }
            }
            Ranking::Weighted { weights } => {
                if weights.is_empty() {
                    return Err(SpecError::at(
                        "ranking.weights",
                        "must name at least one dimension",
                    ));
                }
                let mut total = 0.0;
                for (i, w) in weights.iter().enumerate() {
                    if !w.weight.is_finite() || w.weight < 0.0 {
                        return Err(SpecError::at(
                            format!("ranking.weights[{i}].weight"),
                            "must be a finite non-negative number",
                        ));
                    }
                    total += w.weight;
                }
                if total <= 0.0 {
                    return Err(SpecError::at("ranking.weights", "weights must not all be zero"));
                }
            }
        }
        Ok(())
    }
}

fn default_lr() -> f64 {
    0.1
}
fn default_epochs() -> u32 {
    2000
}
fn default_l2() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegHyper {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: u32,
    #[serde(default = "default_l2")]
    pub l2: f64,
}

impl Default for LogRegHyper {
    fn default() -> Self {
        LogRegHyper { learning_rate: default_lr(), epochs: default_epochs(), l2: default_l2() }
    }
}

fn default_trees() -> u32 {
    200
}
fn default_depth() -> u32 {
    8
}
fn default_min_leaf() -> u32 {
    5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestHyper {
    #[serde(default = "default_trees")]
    pub n_trees: u32,
    #[serde(default = "default_depth")]
    pub max_depth: u32,
    #[serde(default = "default_min_leaf")]
    pub min_leaf: u32,
    /// Fraction of features considered per split; `None` means √d.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_subsample: Option<f64>,
}

impl Default for ForestHyper {
    fn default() -> Self {
        ForestHyper {
            n_trees: default_trees(),
            max_depth: default_depth(),
            min_leaf: default_min_leaf(),
            feature_subsample: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HyperParams {
    #[serde(default)]
    pub logreg: LogRegHyper,
    #[serde(default)]
    pub forest: ForestHyper,
}

/// Keeps only the highest-priority sets when a full product is too wide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunePolicy {
    pub max_count: usize,
    /// Additive per-operationalization scores; a set's priority is the sum
    /// over its choices. Empty means "keep the first `max_count`".
    #[serde(default)]
    pub priorities: Vec<PrunePriority>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunePriority {
    pub requirement: String,
    pub index: u32,
    pub score: f64,
}

fn default_monitoring_limit() -> f64 {
    0.10
}

/// The validated, declarative description of one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub requirements: Vec<LegalRequirement>,
    pub operationalizations: Vec<Operationalization>,
    #[serde(default)]
    pub rules: Vec<CompatibilityRule>,
    /// Sensitive attribute used by fairness metrics and reject-option.
    pub protected_feature: String,
    /// Value of the protected feature designating the unprivileged group —
    /// the group whose over-representation among alerts counts as positive
    /// disparity and which reject-option favors. Required whenever any
    /// requirement evaluates disparity or any reject-option is declared.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unprivileged_value: Option<String>,
    /// Features that define disparity strata (numeric ones are binned into
    /// quintiles on the evaluation split).
    #[serde(default)]
    pub strata_features: Vec<String>,
    pub split: SplitFractions,
    pub seed: u64,
    /// Whether the trained model leaves the controller's environment;
    /// feeds the re-identification risk category.
    #[serde(default)]
    pub model_shared_externally: bool,
    /// Explicit risk override from a human assessment, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk_override: Option<RiskCategory>,
    pub selection: SelectionPolicy,
    #[serde(default)]
    pub hyper: HyperParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune: Option<PrunePolicy>,
    /// Soft disparity limit; exceeding it flags "monitoring recommended".
    #[serde(default = "default_monitoring_limit")]
    pub cdd_monitoring_limit: f64,
    /// Swap the anonymize/minimize stages (experimentation escape hatch).
    #[serde(default)]
    pub minimize_before_anonymize: bool,
}

/// Validation failure with a JSON-path-like location.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct SpecError {
    pub path: String,
    pub message: String,
}

impl SpecError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        SpecError { path: path.into(), message: message.into() }
    }
}

/// Parses and validates a raw JSON specification.
pub fn validate_spec(raw: &str) -> Result<RunSpec, SpecError> {
    let spec: RunSpec = serde_json::from_str(raw)
        .map_err(|e| SpecError::at("$", e.to_string()))?;
    spec.validated()
}

impl RunSpec {
    /// Looks up one operationalization by requirement id and index.
    pub fn op(&self, requirement: &str, index: u32) -> Option<&Operationalization> {
        self.operationalizations
            .iter()
            .find(|o| o.requirement == requirement && o.index == index)
    }

    /// The op plus everything it transitively extends, base first.
    pub fn effective_chain<'a>(&'a self, op: &'a Operationalization) -> Vec<&'a Operationalization> {
        let mut chain = vec![op];
        let mut current = op;
        while let Some(base_ix) = current.extends {
            match self.op(&current.requirement, base_ix) {
                Some(base) => {
                    chain.push(base);
                    current = base;
                }
                None => break, // validation rules this out
            }
        }
        chain.reverse();
        chain
    }

    fn requirement_position(&self, id: &str) -> Option<usize> {
        self.requirements.iter().position(|r| r.id == id)
    }

    /// Semantic validation + normalization. Operationalizations come back
    /// sorted by (requirement order, index); everything else is checked in
    /// place. Validating a previously validated spec is the identity.
    pub fn validated(mut self) -> Result<RunSpec, SpecError> {
        if self.requirements.is_empty() {
            return Err(SpecError::at("requirements", "at least one requirement is required"));
        }
        let mut req_ids = BTreeSet::new();
        for (i, r) in self.requirements.iter().enumerate() {
            if r.id.trim().is_empty() {
                return Err(SpecError::at(format!("requirements[{i}].id"), "must not be empty"));
            }
            if !req_ids.insert(r.id.clone()) {
                return Err(SpecError::at(
                    format!("requirements[{i}].id"),
                    format!("duplicate requirement id {:?}", r.id),
                ));
            }
        }

        for (i, op) in self.operationalizations.iter().enumerate() {
            if self.requirement_position(&op.requirement).is_none() {
                return Err(SpecError::at(
                    format!("operationalizations[{i}].requirement"),
                    format!("unknown requirement {:?}", op.requirement),
                ));
            }
            if op.index < 1 {
                return Err(SpecError::at(
                    format!("operationalizations[{i}].index"),
                    "indices are 1-based",
                ));
            }
        }

        // Normalize: canonical order is (requirement appearance, index).
        let positions: BTreeMap<String, usize> = self
            .requirements
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i))
            .collect();
        self.operationalizations
            .sort_by_key(|o| (positions[&o.requirement], o.index));

        // Per requirement: indices must be exactly 1..=m.
        for (ri, r) in self.requirements.iter().enumerate() {
            let indices: Vec<u32> = self
                .operationalizations
                .iter()
                .filter(|o| o.requirement == r.id)
                .map(|o| o.index)
                .collect();
            if indices.is_empty() {
                return Err(SpecError::at(
                    format!("requirements[{ri}]"),
                    format!("requirement {:?} has no operationalizations", r.id),
                ));
            }
            let expected: Vec<u32> = (1..=indices.len() as u32).collect();
            if indices != expected {
                return Err(SpecError::at(
                    format!("requirements[{ri}]"),
                    format!(
                        "operationalization indices for {:?} must be contiguous from 1, got {:?}",
                        r.id, indices
                    ),
                ));
            }
        }

        for (i, op) in self.operationalizations.iter().enumerate() {
            if let Some(base) = op.extends {
                if base < 1 || base >= op.index {
                    return Err(SpecError::at(
                        format!("operationalizations[{i}].extends"),
                        format!(
                            "must reference a lower index of the same requirement, got {base} from index {}",
                            op.index
                        ),
                    ));
                }
            }
            op.check_params()
                .map_err(|m| SpecError::at(format!("operationalizations[{i}].{}", param_path(&m)), m))?;
        }

        for (i, rule) in self.rules.iter().enumerate() {
            for (side, opref) in [("antecedent", &rule.antecedent), ("consequent", &rule.consequent)] {
                let path = format!("rules[{i}].{side}");
                if self.requirement_position(&opref.requirement).is_none() {
                    return Err(SpecError::at(
                        path,
                        format!("unknown requirement {:?}", opref.requirement),
                    ));
                }
                if self.op(&opref.requirement, opref.index).is_none() {
                    return Err(SpecError::at(
                        path,
                        format!(
                            "requirement {:?} has no operationalization with index {}",
                            opref.requirement, opref.index
                        ),
                    ));
                }
            }
            if rule.antecedent == rule.consequent {
                return Err(SpecError::at(format!("rules[{i}]"), "rule references itself"));
            }
        }

        if self.protected_feature.trim().is_empty() {
            return Err(SpecError::at("protected_feature", "must not be empty"));
        }
        let needs_strata = self.requirements.iter().any(|r| r.evaluation == EvaluationKind::Cdd);
        if needs_strata && self.strata_features.is_empty() {
            return Err(SpecError::at(
                "strata_features",
                "must be non-empty when a requirement is evaluated by conditional demographic disparity",
            ));
        }
        let needs_group = needs_strata
            || self
                .operationalizations
                .iter()
                .any(|o| o.kind == OperationalizationKind::RejectOption);
        match &self.unprivileged_value {
            Some(v) if v.trim().is_empty() => {
                return Err(SpecError::at("unprivileged_value", "must not be empty"));
            }
            None if needs_group => {
                return Err(SpecError::at(
                    "unprivileged_value",
                    "required when a requirement is evaluated by conditional demographic \
                     disparity or a reject-option operationalization is declared",
                ));
            }
            _ => {}
        }

        let s = &self.split;
        for (name, v) in [("train", s.train), ("validation", s.validation), ("test", s.test)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(SpecError::at(format!("split.{name}"), "must be a positive fraction"));
            }
        }
        if ((s.train + s.validation + s.test) - 1.0).abs() > 1e-9 {
            return Err(SpecError::at("split", "fractions must sum to 1.0"));
        }

        self.selection
            .validate()
            .map_err(|e| SpecError::at(format!("selection.{}", e.path), e.message))?;

        let h = &self.hyper;
        if h.logreg.learning_rate.is_nan() || h.logreg.learning_rate <= 0.0 {
            return Err(SpecError::at("hyper.logreg.learning_rate", "must be > 0"));
        }
        if h.logreg.epochs < 1 {
            return Err(SpecError::at("hyper.logreg.epochs", "must be ≥ 1"));
        }
        if h.logreg.l2 < 0.0 {
            return Err(SpecError::at("hyper.logreg.l2", "must be ≥ 0"));
        }
        if h.forest.n_trees < 1 {
            return Err(SpecError::at("hyper.forest.n_trees", "must be ≥ 1"));
        }
        if h.forest.max_depth < 1 {
            return Err(SpecError::at("hyper.forest.max_depth", "must be ≥ 1"));
        }
        if h.forest.min_leaf < 1 {
            return Err(SpecError::at("hyper.forest.min_leaf", "must be ≥ 1"));
        }
        if let Some(fs) = h.forest.feature_subsample {
            if !(fs > 0.0 && fs <= 1.0) {
                return Err(SpecError::at("hyper.forest.feature_subsample", "must lie in (0, 1]"));
            }
        }

        if let Some(p) = &self.prune {
            if p.max_count < 1 {
                return Err(SpecError::at("prune.max_count", "must be ≥ 1"));
            }
            for (i, pr) in p.priorities.iter().enumerate() {
                if self.op(&pr.requirement, pr.index).is_none() {
                    return Err(SpecError::at(
                        format!("prune.priorities[{i}]"),
                        format!("unknown requirement {:?} or index {}", pr.requirement, pr.index),
                    ));
                }
            }
        }

        if self.cdd_monitoring_limit.is_nan() || self.cdd_monitoring_limit < 0.0 {
            return Err(SpecError::at("cdd_monitoring_limit", "must be ≥ 0"));
        }

        Ok(self)
    }
}

/// Param validation messages start with "params.<key>"; reuse that as the
/// trailing path segment so errors point at the offending field.
fn param_path(message: &str) -> String {
    let head = message.split_whitespace().next().unwrap_or("params");
    if head.starts_with("params") {
        head.to_string()
    } else {
        "params".to_string()
    }
}

/// Consistency of a dataset against a validated spec. Returns all
/// violations; empty output means the pair is runnable.
pub fn validate_dataset(dataset: &Dataset, spec: &RunSpec) -> Vec<String> {
    let mut out = dataset.structural_violations();
    match dataset.feature(&spec.protected_feature) {
        None => out.push(format!("protected feature absent: {:?}", spec.protected_feature)),
        Some((ix, _)) => {
            if let Some(v) = &spec.unprivileged_value {
                let seen = dataset.rows.iter().any(|r| &r[ix].render() == v);
                if !seen && !dataset.rows.is_empty() {
                    out.push(format!(
                        "unprivileged value {v:?} never occurs in {:?}",
                        spec.protected_feature
                    ));
                }
            }
        }
    }
    for s in &spec.strata_features {
        if dataset.feature(s).is_none() {
            out.push(format!("stratum feature absent: {s:?}"));
        }
    }
    for op in &spec.operationalizations {
        if let Ok(names) = op.drop_list() {
            for n in &names {
                if dataset.feature(n).is_none() {
                    out.push(format!("dropped feature absent: {n:?} (operationalization {:?})", op.id));
                }
            }
        }
    }
    out
}
