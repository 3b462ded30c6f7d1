//! Operationalization sets: every way of picking exactly one
//! operationalization per requirement, filtered by compatibility rules.
//!
//! Enumeration is lexicographic over the requirement order given in the
//! spec, with the per-requirement index varying fastest on the last
//! requirement. Set ids are assigned 1..=n over the surviving sets in that
//! order, so the numbering of the full cartesian product and of any
//! rule-filtered subset is stable and reproducible.

use serde::{Deserialize, Serialize};

use crate::domain::{CompatibilityRule, OpRef, PrunePolicy, RuleKind, RunSpec};

/// One fully specified configuration: a set id plus one operationalization
/// reference per requirement, in requirement order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationalizationSet {
    pub set_id: u32,
    pub choices: Vec<OpRef>,
}

impl OperationalizationSet {
    /// Index chosen for the given requirement, if the requirement is part
    /// of this set.
    pub fn index_for(&self, requirement: &str) -> Option<u32> {
        self.choices.iter().find(|c| c.requirement == requirement).map(|c| c.index)
    }

    pub fn contains(&self, r: &OpRef) -> bool {
        self.choices.iter().any(|c| c == r)
    }

    /// Short human-readable signature like `nd(1) dm(2) pd(2) ex(1) rc(1)`.
    pub fn signature(&self) -> String {
        self.choices.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SetError {
    /// The compatibility rules eliminated every candidate set.
    #[error("compatibility rules eliminate every operationalization set")]
    EmptyResult,
}

/// Does a candidate set satisfy one rule?
fn rule_holds(choices: &[OpRef], rule: &CompatibilityRule) -> bool {
    let has_antecedent = choices.contains(&rule.antecedent);
    let has_consequent = choices.contains(&rule.consequent);
    match rule.kind {
        RuleKind::Implies => !has_antecedent || has_consequent,
        RuleKind::Excludes => !(has_antecedent && has_consequent),
    }
}

/// Every rule violated by the candidate set, described for diagnostics.
pub fn check_set(choices: &[OpRef], rules: &[CompatibilityRule]) -> Vec<String> {
    rules
        .iter()
        .filter(|r| !rule_holds(choices, r))
        .map(|r| format!("violates: {r}"))
        .collect()
}

/// Enumerates all rule-satisfying operationalization sets in lexicographic
/// requirement-index order and numbers them 1..=n.
pub fn enumerate_sets(spec: &RunSpec) -> Result<Vec<OperationalizationSet>, SetError> {
    let per_requirement: Vec<(String, Vec<u32>)> = spec
        .requirements
        .iter()
        .map(|req| {
            let mut indices: Vec<u32> = spec
                .operationalizations
                .iter()
                .filter(|o| o.requirement == req.id)
                .map(|o| o.index)
                .collect();
            indices.sort_unstable();
            (req.id.clone(), indices)
        })
        .collect();

    let mut sets = Vec::new();
    let mut current: Vec<OpRef> = Vec::with_capacity(per_requirement.len());
    fn walk(
        per_requirement: &[(String, Vec<u32>)],
        depth: usize,
        current: &mut Vec<OpRef>,
        rules: &[CompatibilityRule],
        sets: &mut Vec<Vec<OpRef>>,
    ) {
        if depth == per_requirement.len() {
            if check_set(current, rules).is_empty() {
                sets.push(current.clone());
            }
            return;
        }
        let (req, indices) = &per_requirement[depth];
        for &index in indices {
            current.push(OpRef { requirement: req.clone(), index });
            walk(per_requirement, depth + 1, current, rules, sets);
            current.pop();
        }
    }
    let mut raw: Vec<Vec<OpRef>> = Vec::new();
    walk(&per_requirement, 0, &mut current, &spec.rules, &mut raw);
    if raw.is_empty() {
        return Err(SetError::EmptyResult);
    }
    for (i, choices) in raw.into_iter().enumerate() {
        sets.push(OperationalizationSet { set_id: (i + 1) as u32, choices });
    }
    Ok(sets)
}

/// Applies an optional budget: keeps at most `max_count` sets, preferring
/// sets that score higher under the priority list (sum of scores of
/// matching operationalizations), breaking ties by original set id so the
/// outcome never depends on sort internals. Set ids are preserved, not
/// renumbered, so records stay traceable to the full enumeration.
pub fn prune_sets(
    sets: Vec<OperationalizationSet>,
    policy: Option<&PrunePolicy>,
) -> Vec<OperationalizationSet> {
    let Some(policy) = policy else { return sets };
    if sets.len() <= policy.max_count {
        return sets;
    }
    let score = |s: &OperationalizationSet| -> f64 {
        policy
            .priorities
            .iter()
            .filter(|p| {
                s.contains(&OpRef { requirement: p.requirement.clone(), index: p.index })
            })
            .map(|p| p.score)
            .sum()
    };
    let mut scored: Vec<(f64, OperationalizationSet)> =
        sets.into_iter().map(|s| (score(&s), s)).collect();
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.set_id.cmp(&b.1.set_id))
    });
    scored.truncate(policy.max_count);
    scored.into_iter().map(|(_, s)| s).collect()
}

/// The enumeration rendered as a requirement × set index matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanMatrix {
    /// Requirement display names, in specification order.
    pub requirements: Vec<String>,
    pub set_ids: Vec<u32>,
    /// `cells[r][s]` = 1-based operationalization index chosen for
    /// requirement `r` by the set in column `s`.
    pub cells: Vec<Vec<u32>>,
}

/// Pivots enumerated sets into the requirement × set matrix.
pub fn plan_matrix(spec: &RunSpec, sets: &[OperationalizationSet]) -> PlanMatrix {
    let requirements: Vec<String> = spec.requirements.iter().map(|r| r.name.clone()).collect();
    let set_ids: Vec<u32> = sets.iter().map(|s| s.set_id).collect();
    let cells = spec
        .requirements
        .iter()
        .map(|req| {
            sets.iter()
                .map(|s| s.index_for(&req.id).expect("every set covers every requirement"))
                .collect()
        })
        .collect();
    PlanMatrix { requirements, set_ids, cells }
}

impl PlanMatrix {
    pub fn to_markdown(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let headers: Vec<String> = std::iter::once("Legal Requirement".to_string())
            .chain(self.set_ids.iter().map(|id| format!("Set {id}")))
            .collect();
        let _ = writeln!(out, "| {} |", headers.join(" | "));
        let _ = writeln!(out, "|{}|", vec!["---"; headers.len()].join("|"));
        for (name, row) in self.requirements.iter().zip(&self.cells) {
            let cells: Vec<String> = row.iter().map(|ix| format!("({ix})")).collect();
            let _ = writeln!(out, "| {} | {} |", name, cells.join(" | "));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let headers: Vec<String> = std::iter::once("Legal Requirement".to_string())
            .chain(self.set_ids.iter().map(|id| format!("Set {id}")))
            .collect();
        w.write_record(&headers).expect("in-memory write");
        for (name, row) in self.requirements.iter().zip(&self.cells) {
            let mut cells = vec![name.clone()];
            cells.extend(row.iter().map(|ix| format!("({ix})")));
            w.write_record(&cells).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("matrix serializes");
        s.push('\n');
        s
    }
}
