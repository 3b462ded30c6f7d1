//! Trade-off mapping and selection: assembles the per-set evaluation table,
//! extracts the Pareto front, applies the declarative selection policy, and
//! renders the justification report.
//!
//! Every function here is pure and deterministic: the same records, policy,
//! and specification always produce byte-identical renders, which is what
//! lets a report be regenerated from persisted artifacts and compared
//! verbatim.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::domain::{
    Dimension, EvaluationKind, Explainability, OperationalizationKind, RankDirection, Ranking,
    RiskCategory, RunSpec, SelectionPolicy, Threshold,
};
use crate::metrics::data_usage_percent;
use crate::setform::OperationalizationSet;

/// The quantitative and categorical outcomes of one successfully evaluated
/// operationalization set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Fraction of the available training pool actually used, in [0, 1].
    pub data_used_fraction: f64,
    pub k_anonymized: bool,
    /// Verified minimum quasi-identifier class size, when anonymized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub achieved_k: Option<u64>,
    /// Conditional demographic disparity, signed.
    pub cdd: f64,
    pub risk: RiskCategory,
    pub explainability: Explainability,
}

impl RecordMetrics {
    /// Comparable numeric value of a dimension. Categorical dimensions map
    /// to their ordinal rank; interpret it through the dimension's
    /// direction (risk rank: lower is better; explainability: higher).
    pub fn value(&self, dim: Dimension) -> f64 {
        match dim {
            Dimension::Accuracy => self.accuracy,
            Dimension::Precision => self.precision,
            Dimension::F1 => self.f1,
            Dimension::Recall => self.recall,
            Dimension::DataUsed => self.data_used_fraction,
            Dimension::KAnonymity => f64::from(u8::from(self.k_anonymized)),
            Dimension::AbsCdd => self.cdd.abs(),
            Dimension::Risk => f64::from(self.risk.rank()),
            Dimension::Explainability => f64::from(self.explainability.rank()),
        }
    }

    fn observed(&self, dim: Dimension) -> String {
        match dim {
            Dimension::DataUsed => data_usage_percent(self.data_used_fraction),
            Dimension::KAnonymity => {
                if self.k_anonymized {
                    "yes".to_string()
                } else {
                    "no".to_string()
                }
            }
            Dimension::Risk => self.risk.to_string(),
            Dimension::Explainability => self.explainability.to_string(),
            Dimension::AbsCdd => format!("{:.3}", self.cdd.abs()),
            _ => format!("{:.3}", self.value(dim)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RecordStatus {
    Ok { metrics: RecordMetrics },
    Failed { error: String },
}

/// One row of the trade-off table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRecord {
    pub set_id: u32,
    /// Human-readable set signature, e.g. `nd(1) dm(2) pd(2) ex(1) rc(1)`.
    pub signature: String,
    #[serde(flatten)]
    pub status: RecordStatus,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl TradeoffRecord {
    pub fn ok(set_id: u32, signature: impl Into<String>, metrics: RecordMetrics) -> Self {
        debug_assert!(
            [
                metrics.accuracy,
                metrics.precision,
                metrics.recall,
                metrics.f1,
                metrics.data_used_fraction,
                metrics.cdd
            ]
            .iter()
            .all(|v| v.is_finite()),
            "ok records carry finite metrics"
        );
        TradeoffRecord {
            set_id,
            signature: signature.into(),
            status: RecordStatus::Ok { metrics },
            notes: Vec::new(),
        }
    }

    pub fn failed(set_id: u32, signature: impl Into<String>, error: impl Into<String>) -> Self {
        TradeoffRecord {
            set_id,
            signature: signature.into(),
            status: RecordStatus::Failed { error: error.into() },
            notes: Vec::new(),
        }
    }

    pub fn metrics(&self) -> Option<&RecordMetrics> {
        match &self.status {
            RecordStatus::Ok { metrics } => Some(metrics),
            RecordStatus::Failed { .. } => None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// The assembled table, ordered by set id, plus rendering configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffTable {
    pub records: Vec<TradeoffRecord>,
    /// Header label of the disparity column; callers append the protected
    /// feature, e.g. "CDD (Gender)".
    pub cdd_label: String,
}

/// Sorts records by set id and wraps them for rendering.
pub fn build_table(records: &[TradeoffRecord]) -> TradeoffTable {
    assert!(!records.is_empty(), "a trade-off table needs at least one record");
    let mut records = records.to_vec();
    records.sort_by_key(|r| r.set_id);
    for pair in records.windows(2) {
        assert_ne!(pair[0].set_id, pair[1].set_id, "one record per set");
    }
    TradeoffTable { records, cdd_label: "CDD".to_string() }
}

impl TradeoffTable {
    pub fn with_cdd_label(mut self, label: impl Into<String>) -> Self {
        self.cdd_label = label.into();
        self
    }

    pub fn record(&self, set_id: u32) -> Option<&TradeoffRecord> {
        self.records.iter().find(|r| r.set_id == set_id)
    }

    fn column_headers(&self) -> Vec<String> {
        vec![
            "Set".to_string(),
            "Accuracy".to_string(),
            "Precision".to_string(),
            "F1 Score".to_string(),
            "% Data Used".to_string(),
            "K-Anonymity".to_string(),
            self.cdd_label.clone(),
            "Likelihood re-identification".to_string(),
            "Explainability".to_string(),
            "Recall".to_string(),
        ]
    }

    fn value_cells(r: &TradeoffRecord) -> Vec<String> {
        match r.metrics() {
            Some(m) => vec![
                format!("{:.2}", m.accuracy),
                format!("{:.2}", m.precision),
                format!("{:.2}", m.f1),
                data_usage_percent(m.data_used_fraction),
                if m.k_anonymized { "Yes".to_string() } else { "No".to_string() },
                format!("{:.2}", m.cdd),
                m.risk.to_string(),
                m.explainability.to_string(),
                format!("{:.2}", m.recall),
            ],
            None => vec!["—".to_string(); 9],
        }
    }

    /// Markdown render: a grouping line naming the predictive-performance
    /// and legal-requirement column families, then the table itself, then
    /// one note line per failed row.
    pub fn to_markdown(&self) -> String {
        let headers = self.column_headers();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "**Predictive Performance:** Accuracy, Precision, F1 Score · \
             **Legal Requirements:** % Data Used, K-Anonymity (data minimization), \
             {} (non-discrimination), Likelihood re-identification (personal data \
             qualification), Explainability, Recall (AML requirements)",
            self.cdd_label
        );
        out.push('\n');
        let _ = writeln!(out, "| {} |", headers.join(" | "));
        let _ = writeln!(out, "|{}|", vec!["---"; headers.len()].join("|"));
        for r in &self.records {
            let mut cells = vec![r.set_id.to_string()];
            cells.extend(Self::value_cells(r));
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        }
        let mut notes = String::new();
        for r in &self.records {
            if let RecordStatus::Failed { error } = &r.status {
                let _ = writeln!(notes, "- Set {} failed: {}", r.set_id, error);
            }
        }
        if !notes.is_empty() {
            out.push('\n');
            out.push_str(&notes);
        }
        out
    }

    /// CSV render (RFC-4180 quoting): the markdown columns plus `Status`
    /// and `Notes` so failures stay machine-readable.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut headers = self.column_headers();
        headers.push("Status".to_string());
        headers.push("Notes".to_string());
        w.write_record(&headers).expect("in-memory write");
        for r in &self.records {
            let mut cells = vec![r.set_id.to_string()];
            cells.extend(Self::value_cells(r));
            cells.push(match &r.status {
                RecordStatus::Ok { .. } => "ok".to_string(),
                RecordStatus::Failed { error } => format!("failed: {error}"),
            });
            cells.push(r.notes.join("; "));
            w.write_record(&cells).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    /// Structured render with full-precision values.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }
}

/// Non-dominated set ids under the given dimension directions. Only
/// successful records compete; a record is dominated when some other record
/// is at least as good on every listed dimension and strictly better on at
/// least one. Records with identical values survive together.
pub fn pareto_front(
    records: &[TradeoffRecord],
    directions: &[(Dimension, RankDirection)],
) -> Vec<u32> {
    assert!(!directions.is_empty(), "the Pareto front needs at least one dimension");
    let oriented = |m: &RecordMetrics, dim: Dimension, dir: RankDirection| match dir {
        RankDirection::Maximize => m.value(dim),
        RankDirection::Minimize => -m.value(dim),
    };
    let ok: Vec<(&TradeoffRecord, &RecordMetrics)> =
        records.iter().filter_map(|r| r.metrics().map(|m| (r, m))).collect();
    let dominates = |a: &RecordMetrics, b: &RecordMetrics| {
        let mut strict = false;
        for &(dim, dir) in directions {
            let (va, vb) = (oriented(a, dim, dir), oriented(b, dim, dir));
            if va < vb {
                return false;
            }
            if va > vb {
                strict = true;
            }
        }
        strict
    };
    let mut front: Vec<u32> = ok
        .iter()
        .filter(|(_, m)| !ok.iter().any(|(_, other)| dominates(other, m)))
        .map(|(r, _)| r.set_id)
        .collect();
    front.sort_unstable();
    front
}

/// Pareto dimensions implied by a selection policy: the ranking dimensions
/// in order, each at its configured (or natural) direction, first mention
/// winning on duplicates.
pub fn policy_directions(policy: &SelectionPolicy) -> Vec<(Dimension, RankDirection)> {
    let mut out: Vec<(Dimension, RankDirection)> = Vec::new();
    let mut push = |dim: Dimension, dir: RankDirection| {
        if !out.iter().any(|&(d, _)| d == dim) {
            out.push((dim, dir));
        }
    };
    match &policy.ranking {
        Ranking::Lexicographic { dimensions } => {
            for &d in dimensions {
                push(d, d.natural_direction());
            }
        }
        Ranking::Weighted { weights } => {
            for w in weights {
                push(w.dimension, w.direction.unwrap_or(w.dimension.natural_direction()));
            }
        }
    }
    out
}

/// One cell of the threshold pass/fail matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOutcome {
    pub set_id: u32,
    pub dimension: Dimension,
    /// Human-readable bound, e.g. "recall ≥ 0.9".
    pub description: String,
    /// Rendered observed value; "— (failed)" for failed sets.
    pub observed: String,
    pub passed: bool,
}

/// The outcome of applying a selection policy to a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub chosen: Option<u32>,
    /// Set ids passing every hard threshold, ascending.
    pub feasible: Vec<u32>,
    /// records × thresholds, in (set id, policy threshold) order.
    pub matrix: Vec<ThresholdOutcome>,
    /// Ordered explanation fragments for the report.
    pub rationale: Vec<String>,
}

fn threshold_passes(m: &RecordMetrics, t: &Threshold) -> bool {
    // A whisker of slack so boundary values ("recall ≥ 0.90" met exactly)
    // are not rejected over representation error.
    const SLACK: f64 = 1e-12;
    if let Some(min) = t.min {
        return m.value(t.dimension) >= min - SLACK;
    }
    if let Some(max) = t.max {
        return m.value(t.dimension) <= max + SLACK;
    }
    if let Some(required) = t.required {
        return !required || m.k_anonymized;
    }
    if let Some(at_most) = t.at_most {
        return m.risk.rank() <= at_most.rank();
    }
    if let Some(at_least) = t.at_least {
        return m.explainability.rank() >= at_least.rank();
    }
    true
}

/// Compares two candidates dimension by dimension in natural directions;
/// the first strict difference decides.
fn lex_better(a: &RecordMetrics, b: &RecordMetrics, dims: &[Dimension]) -> std::cmp::Ordering {
    for &dim in dims {
        let (va, vb) = (a.value(dim), b.value(dim));
        let cmp = match dim.natural_direction() {
            RankDirection::Maximize => va.total_cmp(&vb),
            RankDirection::Minimize => vb.total_cmp(&va),
        };
        if cmp != std::cmp::Ordering::Equal {
            return cmp;
        }
    }
    std::cmp::Ordering::Equal
}

/// Weighted score, higher better: each dimension min-max normalized over
/// the successful records and oriented so 1.0 is the best observed value.
fn weighted_score(
    m: &RecordMetrics,
    weights: &[crate::domain::WeightedDimension],
    ranges: &[(Dimension, f64, f64)],
) -> f64 {
    weights
        .iter()
        .map(|w| {
            let (_, lo, hi) = ranges
                .iter()
                .find(|(d, _, _)| *d == w.dimension)
                .expect("range computed for every weighted dimension");
            let v = m.value(w.dimension);
            let unit = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            let direction = w.direction.unwrap_or_else(|| w.dimension.natural_direction());
            let utility = match direction {
                RankDirection::Maximize => unit,
                RankDirection::Minimize => 1.0 - unit,
            };
            w.weight * utility
        })
        .sum()
}

/// Applies hard thresholds, ranks the survivors, and explains the outcome.
/// An empty feasible set is a valid result: `chosen` stays `None` and the
/// matrix records why each candidate fell out.
pub fn select(records: &[TradeoffRecord], policy: &SelectionPolicy) -> Selection {
    debug_assert!(policy.validate().is_ok(), "policies are validated before selection");
    let mut sorted: Vec<&TradeoffRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.set_id);

    let mut matrix = Vec::new();
    let mut feasible: Vec<u32> = Vec::new();
    for r in &sorted {
        let mut all_passed = r.metrics().is_some();
        for t in &policy.thresholds {
            let (observed, passed) = match r.metrics() {
                Some(m) => (m.observed(t.dimension), threshold_passes(m, t)),
                None => ("— (failed)".to_string(), false),
            };
            all_passed &= passed;
            matrix.push(ThresholdOutcome {
                set_id: r.set_id,
                dimension: t.dimension,
                description: t.describe(),
                observed,
                passed,
            });
        }
        if all_passed {
            feasible.push(r.set_id);
        }
    }

    let candidates: Vec<(&TradeoffRecord, &RecordMetrics)> = sorted
        .iter()
        .filter(|r| feasible.contains(&r.set_id))
        .filter_map(|r| r.metrics().map(|m| (*r, m)))
        .collect();

    let chosen = match &policy.ranking {
        Ranking::Lexicographic { dimensions } => candidates
            .iter()
            .reduce(|best, c| {
                // Strictly better replaces; ties keep the earlier (lower id).
                if lex_better(c.1, best.1, dimensions) == std::cmp::Ordering::Greater {
                    c
                } else {
                    best
                }
            })
            .map(|(r, _)| r.set_id),
        Ranking::Weighted { weights } => {
            let all_ok: Vec<&RecordMetrics> =
                sorted.iter().filter_map(|r| r.metrics()).collect();
            let ranges: Vec<(Dimension, f64, f64)> = weights
                .iter()
                .map(|w| {
                    let vals: Vec<f64> = all_ok.iter().map(|m| m.value(w.dimension)).collect();
                    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    (w.dimension, lo, hi)
                })
                .collect();
            candidates
                .iter()
                .map(|(r, m)| (r.set_id, weighted_score(m, weights, &ranges)))
                .reduce(|best, c| if c.1 > best.1 { c } else { best })
                .map(|(id, _)| id)
        }
    };

    let mut rationale = Vec::new();
    let evaluated_ok = sorted.iter().filter(|r| r.metrics().is_some()).count();
    let failed = sorted.len() - evaluated_ok;
    if failed > 0 {
        rationale.push(format!(
            "{failed} of {} sets failed during execution and were excluded.",
            sorted.len()
        ));
    }
    if policy.thresholds.is_empty() {
        rationale.push("No hard thresholds configured; every evaluated set is feasible.".into());
    } else if feasible.is_empty() {
        rationale.push("No set satisfies all hard thresholds.".into());
        for t in &policy.thresholds {
            let failing: Vec<String> = matrix
                .iter()
                .filter(|o| o.description == t.describe() && !o.passed)
                .map(|o| o.set_id.to_string())
                .collect();
            if !failing.is_empty() {
                rationale.push(format!(
                    "Binding constraint {}: failed by set(s) {}.",
                    t.describe(),
                    failing.join(", ")
                ));
            }
        }
    } else {
        rationale.push(format!(
            "Feasible sets after hard thresholds: {}.",
            feasible.iter().map(u32::to_string).collect::<Vec<_>>().join(", ")
        ));
    }
    match &policy.ranking {
        Ranking::Lexicographic { dimensions } => rationale.push(format!(
            "Ranking: lexicographic over [{}], natural directions, ties to the lower set id.",
            dimensions.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
        )),
        Ranking::Weighted { weights } => rationale.push(format!(
            "Ranking: weighted score over [{}].",
            weights
                .iter()
                .map(|w| format!("{} × {}", w.dimension, w.weight))
                .collect::<Vec<_>>()
                .join(", ")
        )),
    }
    if let Some(id) = chosen {
        let record = sorted.iter().find(|r| r.set_id == id).expect("chosen is a record");
        rationale.push(format!("Chosen: Set {id} ({}).", record.signature));
        for token in record.signature.split_whitespace() {
            if let Some((req, rest)) = token.split_once('(') {
                rationale.push(format!(
                    "{req}: operationalization ({}",
                    rest // keeps the ")"
                ));
            }
        }
    }

    Selection { chosen, feasible, matrix, rationale }
}

/// Everything the report renderer needs, already computed.
pub struct ReportContext<'a> {
    pub spec: &'a RunSpec,
    pub sets: &'a [OperationalizationSet],
    pub table: &'a TradeoffTable,
    pub selection: &'a Selection,
    pub pareto: &'a [u32],
    pub run_id: &'a str,
}

fn evaluation_label(kind: EvaluationKind) -> &'static str {
    match kind {
        EvaluationKind::PerfPanel => "predictive performance panel (accuracy, precision, F1)",
        EvaluationKind::Cdd => "conditional demographic disparity across configured strata",
        EvaluationKind::DataUsageKAnon => {
            "share of the available training data used, plus k-anonymity status"
        }
        EvaluationKind::RiskCategory => "qualitative re-identification risk category",
        EvaluationKind::ExplainabilityCategory => "qualitative explainability category",
        EvaluationKind::Recall => "recall on held-out alerts",
    }
}

fn evaluation_outcome(kind: EvaluationKind, m: &RecordMetrics, spec: &RunSpec) -> String {
    match kind {
        EvaluationKind::PerfPanel => format!(
            "accuracy {:.2}, precision {:.2}, F1 {:.2}",
            m.accuracy, m.precision, m.f1
        ),
        EvaluationKind::Cdd => {
            let mut s = format!("CDD {:+.3} (|CDD| {:.3})", m.cdd, m.cdd.abs());
            if m.cdd.abs() > spec.cdd_monitoring_limit {
                let _ = write!(
                    s,
                    " — exceeds the soft limit {:.3}; close monitoring recommended",
                    spec.cdd_monitoring_limit
                );
            }
            s
        }
        EvaluationKind::DataUsageKAnon => {
            let mut s = format!("{} of the training pool used", data_usage_percent(m.data_used_fraction));
            match (m.k_anonymized, m.achieved_k) {
                (true, Some(k)) => {
                    let _ = write!(s, "; k-anonymity verified with minimum class size {k}");
                }
                (true, None) => s.push_str("; k-anonymity applied"),
                (false, _) => s.push_str("; no k-anonymity"),
            }
            s
        }
        EvaluationKind::RiskCategory => format!("re-identification likelihood: {}", m.risk),
        EvaluationKind::ExplainabilityCategory => format!("explainability: {}", m.explainability),
        EvaluationKind::Recall => format!("recall {:.2}", m.recall),
    }
}

fn kind_label(kind: OperationalizationKind) -> &'static str {
    match kind {
        OperationalizationKind::FeatureDrop => "hide listed features from the model",
        OperationalizationKind::RejectOption => "reject-option override of low-confidence alerts",
        OperationalizationKind::DataMinimization => "marginal-performance training-data stop rule",
        OperationalizationKind::KAnonymity => "k-anonymity generalization of quasi-identifiers",
        OperationalizationKind::NoOp => "no additional measure",
        OperationalizationKind::ModelFamily => "model family commitment",
        OperationalizationKind::ClassWeighting => "cost-sensitive class weighting",
    }
}

/// Renders the Markdown justification report. Pure function of its inputs;
/// regenerating from persisted artifacts reproduces the bytes exactly.
pub fn render_report(ctx: &ReportContext) -> String {
    let mut out = String::new();
    let push = |out: &mut String, s: &str| {
        out.push_str(s);
        out.push('\n');
    };

    push(&mut out, "# Model Selection and Justification Report");
    push(&mut out, "");
    push(&mut out, &format!("Run: `{}`", ctx.run_id));
    push(&mut out, "");

    let chosen_record = ctx.selection.chosen.and_then(|id| ctx.table.record(id));
    let chosen_set = ctx
        .selection
        .chosen
        .and_then(|id| ctx.sets.iter().find(|s| s.set_id == id));

    push(&mut out, "## Requirements and Chosen Operationalizations");
    push(&mut out, "");
    for req in &ctx.spec.requirements {
        push(&mut out, &format!("### {} (`{}`)", req.name, req.id));
        push(&mut out, &format!("- Evaluated by: {}.", evaluation_label(req.evaluation)));
        match (chosen_set, chosen_record.and_then(|r| r.metrics())) {
            (Some(set), Some(metrics)) => {
                if let Some(ix) = set.index_for(&req.id) {
                    if let Some(op) = ctx.spec.op(&req.id, ix) {
                        let chain = ctx.spec.effective_chain(op);
                        for (pos, link) in chain.iter().enumerate() {
                            let role = if pos + 1 == chain.len() {
                                "Chosen operationalization"
                            } else {
                                "Inherited base measure"
                            };
                            let params = if link.params.is_empty() {
                                String::new()
                            } else {
                                format!(
                                    " with `{}`",
                                    serde_json::to_string(&link.params).expect("params serialize")
                                )
                            };
                            push(
                                &mut out,
                                &format!(
                                    "- {role}: ({}) {}{params}.",
                                    link.index,
                                    kind_label(link.kind)
                                ),
                            );
                        }
                        push(
                            &mut out,
                            &format!(
                                "- Outcome: {}.",
                                evaluation_outcome(req.evaluation, metrics, ctx.spec)
                            ),
                        );
                    }
                }
            }
            _ => push(&mut out, "- No model selected; see the Selection section."),
        }
        push(&mut out, "");
    }

    push(&mut out, "## Trade-off Table");
    push(&mut out, "");
    out.push_str(&ctx.table.to_markdown());
    push(&mut out, "");

    push(&mut out, "## Pareto Front");
    push(&mut out, "");
    if ctx.pareto.is_empty() {
        push(&mut out, "No successful sets to compare.");
    } else {
        push(
            &mut out,
            "Sets not dominated on the compared dimensions (better on at least one \
             dimension than every alternative that matches them elsewhere):",
        );
        for id in ctx.pareto {
            let sig = ctx.table.record(*id).map(|r| r.signature.as_str()).unwrap_or("");
            push(&mut out, &format!("- Set {id} ({sig})"));
        }
    }
    push(&mut out, "");

    push(&mut out, "## Threshold Matrix");
    push(&mut out, "");
    let thresholds: Vec<&str> = {
        let mut seen = Vec::new();
        for o in &ctx.selection.matrix {
            if !seen.contains(&o.description.as_str()) {
                seen.push(o.description.as_str());
            }
        }
        seen
    };
    if thresholds.is_empty() {
        push(&mut out, "No hard thresholds configured.");
    } else {
        push(&mut out, &format!("| Set | {} |", thresholds.join(" | ")));
        push(&mut out, &format!("|---|{}|", vec!["---"; thresholds.len()].join("|")));
        let set_ids: Vec<u32> = {
            let mut ids: Vec<u32> =
                ctx.selection.matrix.iter().map(|o| o.set_id).collect::<BTreeSet<_>>().into_iter().collect();
            ids.sort_unstable();
            ids
        };
        for id in set_ids {
            let cells: Vec<String> = thresholds
                .iter()
                .map(|t| {
                    ctx.selection
                        .matrix
                        .iter()
                        .find(|o| o.set_id == id && o.description == *t)
                        .map(|o| {
                            format!("{} ({})", if o.passed { "pass" } else { "fail" }, o.observed)
                        })
                        .unwrap_or_else(|| "—".to_string())
                })
                .collect();
            push(&mut out, &format!("| {id} | {} |", cells.join(" | ")));
        }
    }
    push(&mut out, "");

    push(&mut out, "## Selection");
    push(&mut out, "");
    match ctx.selection.chosen {
        Some(id) => push(&mut out, &format!("**Chosen: Set {id}.**")),
        None => push(&mut out, "**No model meets all hard thresholds; nothing was selected.**"),
    }
    for fragment in &ctx.selection.rationale {
        push(&mut out, &format!("- {fragment}"));
    }
    if let (Some(m), true) = (
        chosen_record.and_then(|r| r.metrics()),
        ctx.selection.chosen.is_some(),
    ) {
        if m.cdd.abs() > ctx.spec.cdd_monitoring_limit {
            push(
                &mut out,
                &format!(
                    "- **Monitoring recommended:** |CDD| {:.3} exceeds the configured soft \
                     limit {:.3}; disparity should be tracked in production.",
                    m.cdd.abs(),
                    ctx.spec.cdd_monitoring_limit
                ),
            );
        }
    }
    push(&mut out, "");

    push(&mut out, "## Implementation-Chosen Parameters");
    push(&mut out, "");
    let order = if ctx.spec.minimize_before_anonymize {
        "feature drop → data minimization → k-anonymity → class weighting → training → reject-option"
    } else {
        "feature drop → k-anonymity → data minimization → class weighting → training → reject-option"
    };
    push(&mut out, &format!("- Stage order: {order}."));
    push(
        &mut out,
        "- Data-minimization stopping rule: consume the shuffled training pool in batches; \
         stop at the first step where the validation-loss slope over the trailing three \
         batches rises to or above the configured threshold.",
    );
    push(
        &mut out,
        "- Reject-option: the override threshold θ is tuned on the validation split over the \
         grid 0.55–1.00 (step 0.05), minimizing |CDD| subject to the configured recall-drop \
         budget.",
    );
    push(
        &mut out,
        "- k-anonymity: quasi-identifiers are generalized by median-split partitioning fitted \
         on the training split only; validation/test rows are mapped through the fitted \
         partition.",
    );
    push(
        &mut out,
        "- Disparity strata: numeric stratum features are discretized into quintiles computed \
         on the evaluation split.",
    );
    push(
        &mut out,
        &format!(
            "- Seed {}; split {:.2}/{:.2}/{:.2} (train/validation/test); |CDD| monitoring \
             limit {:.3}.",
            ctx.spec.seed,
            ctx.spec.split.train,
            ctx.spec.split.validation,
            ctx.spec.split.test,
            ctx.spec.cdd_monitoring_limit
        ),
    );
    let noted: Vec<&TradeoffRecord> =
        ctx.table.records.iter().filter(|r| !r.notes.is_empty()).collect();
    if !noted.is_empty() {
        push(&mut out, "- Per-set execution notes:");
        for r in noted {
            push(&mut out, &format!("  - Set {}: {}", r.set_id, r.notes.join("; ")));
        }
    }
    push(&mut out, "");

    push(&mut out, "## Legal Risks Not Evaluated Here");
    push(&mut out, "");
    for line in [
        "- Discrimination channels outside the measured protected feature and strata \
         (intersectional effects, proxies not captured by the disparity metric).",
        "- Data-quality, purpose-limitation, and storage-limitation obligations for the \
         underlying records.",
        "- Security of processing, access control, and breach-response duties.",
        "- Explainability obligations toward affected individuals (the categories here grade \
         investigator-facing explainability only).",
        "- Ongoing-monitoring, drift, and retraining governance after deployment.",
    ] {
        push(&mut out, line);
    }
    push(
        &mut out,
        "\nA favorable evaluation on the dimensions above does not by itself discharge the \
         obligation to assess and mitigate these risks; they require separate measures.",
    );

    out
}
