//! Shared domain vocabulary: datasets, requirements, operationalizations,
//! compatibility rules, and the validated run specification.

mod dataset;
mod spec;

pub use dataset::{Cell, DataError, Dataset, FeatureDef, FeatureKind, FeatureRole};
pub use spec::{
    validate_dataset, validate_spec, CompatibilityRule, Dimension, EvaluationKind, Explainability,
    ForestHyper, HyperParams, LegalRequirement, LogRegHyper, ModelFamily, Operationalization,
    OperationalizationKind, OpRef, PrunePolicy, PrunePriority, RankDirection, Ranking,
    RiskCategory, RuleKind, RunSpec, SelectionPolicy, SpecError, SplitFractions, Threshold,
    WeightPolicy, WeightedDimension,
};

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_spec_json() -> serde_json::Value {
        serde_json::json!({
            "requirements": [
                {"id": "fairness", "name": "Fairness", "evaluation": "cdd"},
                {"id": "privacy", "name": "Privacy", "evaluation": "data-usage+k-anon"}
            ],
            "operationalizations": [
                {"id": "f1", "requirement": "fairness", "index": 1, "kind": "feature-drop",
                 "params": {"features": ["Gender"]}},
                {"id": "p1", "requirement": "privacy", "index": 1, "kind": "k-anonymity",
                 "params": {"k": 5}},
                {"id": "p2", "requirement": "privacy", "index": 2, "kind": "no-op"}
            ],
            "rules": [
                {"kind": "implies",
                 "antecedent": {"requirement": "fairness", "index": 1},
                 "consequent": {"requirement": "privacy", "index": 1}}
            ],
            "protected_feature": "Gender",
            "unprivileged_value": "Female",
            "strata_features": ["Industry"],
            "split": {"train": 0.6, "validation": 0.2, "test": 0.2},
            "seed": 42,
            "selection": {
                "thresholds": [{"dimension": "recall", "min": 0.8}],
                "ranking": {"rule": "lexicographic", "dimensions": ["recall"]}
            }
        })
    }

    #[test]
    fn valid_spec_parses_and_normalizes() {
        let spec = validate_spec(&minimal_spec_json().to_string()).unwrap();
        assert_eq!(spec.requirements.len(), 2);
        assert_eq!(spec.operationalizations.len(), 3);
        assert_eq!(spec.hyper.logreg.epochs, 2000);
        assert_eq!(spec.hyper.forest.n_trees, 200);
        assert!((spec.cdd_monitoring_limit - 0.10).abs() < 1e-12);
    }

    #[test]
    fn revalidation_is_identity() {
        let spec = validate_spec(&minimal_spec_json().to_string()).unwrap();
        let reserialized = serde_json::to_string(&spec).unwrap();
        let again = validate_spec(&reserialized).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn small_k_is_rejected_with_field_path() {
        let mut v = minimal_spec_json();
        v["operationalizations"][1]["params"]["k"] = serde_json::json!(1);
        let err = validate_spec(&v.to_string()).unwrap_err();
        assert!(err.path.ends_with("params.k"), "path was {}", err.path);
        assert_eq!(err.message, "params.k must be ≥ 2");
    }

    #[test]
    fn disparity_specs_must_designate_the_unprivileged_group() {
        let mut v = minimal_spec_json();
        v.as_object_mut().unwrap().remove("unprivileged_value");
        let err = validate_spec(&v.to_string()).unwrap_err();
        assert_eq!(err.path, "unprivileged_value");
        assert!(err.message.contains("required"), "{err}");

        // Without any disparity evaluation or reject-option the field is optional.
        v["requirements"][0]["evaluation"] = serde_json::json!("recall");
        validate_spec(&v.to_string()).unwrap();
    }

    #[test]
    fn rule_with_unknown_requirement_is_rejected() {
        let mut v = minimal_spec_json();
        v["rules"][0]["consequent"]["requirement"] = serde_json::json!("nonexistent");
        let err = validate_spec(&v.to_string()).unwrap_err();
        assert!(err.message.contains("unknown requirement"), "{err}");
        assert!(err.path.starts_with("rules[0]"), "{err}");
    }

    #[test]
    fn bad_split_fractions_are_rejected() {
        let mut v = minimal_spec_json();
        v["split"] = serde_json::json!({"train": 0.5, "validation": 0.5, "test": 0.1});
        let err = validate_spec(&v.to_string()).unwrap_err();
        assert_eq!(err.path, "split");
        assert!(err.message.contains("fractions must sum to 1.0"));
    }

    #[test]
    fn noncontiguous_indices_are_rejected() {
        let mut v = minimal_spec_json();
        v["operationalizations"][2]["index"] = serde_json::json!(3);
        let err = validate_spec(&v.to_string()).unwrap_err();
        assert!(err.message.contains("contiguous"), "{err}");
    }

    #[test]
    fn self_referential_rule_is_rejected() {
        let mut v = minimal_spec_json();
        v["rules"][0]["consequent"] = serde_json::json!({"requirement": "fairness", "index": 1});
        let err = validate_spec(&v.to_string()).unwrap_err();
        assert!(err.message.contains("references itself"), "{err}");
    }

    #[test]
    fn requirement_without_ops_is_rejected() {
        let mut v = minimal_spec_json();
        v["requirements"]
            .as_array_mut()
            .unwrap()
            .push(serde_json::json!({"id": "extra", "name": "Extra", "evaluation": "recall"}));
        let err = validate_spec(&v.to_string()).unwrap_err();
        assert!(err.message.contains("no operationalizations"), "{err}");
    }

    #[test]
    fn extends_must_point_backwards() {
        let mut v = minimal_spec_json();
        v["operationalizations"][1]["extends"] = serde_json::json!(2);
        let err = validate_spec(&v.to_string()).unwrap_err();
        assert!(err.path.ends_with("extends"), "{err}");
    }

    #[test]
    fn effective_chain_walks_extends() {
        let mut v = minimal_spec_json();
        v["operationalizations"][2]["extends"] = serde_json::json!(1);
        let spec = validate_spec(&v.to_string()).unwrap();
        let op = spec.op("privacy", 2).unwrap();
        let chain = spec.effective_chain(op);
        assert_eq!(chain.iter().map(|o| o.index).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn dataset_validation_reports_missing_protected_feature() {
        let spec = validate_spec(&minimal_spec_json().to_string()).unwrap();
        let mut data = Dataset::new(vec![
            FeatureDef::new("Industry", FeatureKind::Categorical, FeatureRole::Feature),
            FeatureDef::new("label", FeatureKind::Categorical, FeatureRole::Label),
        ]);
        data.rows.push(vec![Cell::Text("Finance".into()), Cell::Text("0".into())]);
        let violations = validate_dataset(&data, &spec);
        assert!(violations.iter().any(|m| m.contains("protected feature absent")), "{violations:?}");
    }

    #[test]
    fn dataset_validation_accepts_consistent_pair() {
        let spec = validate_spec(&minimal_spec_json().to_string()).unwrap();
        let mut data = Dataset::new(vec![
            FeatureDef::new("Gender", FeatureKind::Categorical, FeatureRole::Protected),
            FeatureDef::new("Industry", FeatureKind::Categorical, FeatureRole::Feature),
            FeatureDef::new("label", FeatureKind::Categorical, FeatureRole::Label),
        ]);
        data.rows.push(vec![
            Cell::Text("Female".into()),
            Cell::Text("Finance".into()),
            Cell::Text("1".into()),
        ]);
        assert!(validate_dataset(&data, &spec).is_empty());
    }
}
