//! Built-in demonstration fixtures: a complete specification for the
//! anti-money-laundering walkthrough plus the illustrative trade-off
//! records used in documentation and tests.

use crate::domain::{validate_spec, Explainability, RiskCategory, RunSpec};
use crate::trademap::{RecordMetrics, TradeoffRecord};

/// The embedded demonstration specification, as JSON text.
pub fn demo_spec_json() -> &'static str {
    include_str!("../fixtures/demo-spec.json")
}

/// The embedded demonstration specification, validated.
pub fn demo_spec() -> RunSpec {
    validate_spec(demo_spec_json()).expect("the embedded demo spec is valid")
}

/// Illustrative outcomes for the eight demo sets: plausible hand-written
/// values exercising every column, not measurements. Useful for rendering
/// examples and for freezing the selection and Pareto logic in tests.
pub fn illustrative_records() -> Vec<TradeoffRecord> {
    // (accuracy, precision, f1, data fraction, k-anonymized, cdd, recall)
    const VALUES: [(f64, f64, f64, f64, bool, f64, f64); 8] = [
        (0.85, 0.80, 0.86, 0.84, false, 0.10, 0.94),
        (0.82, 0.85, 0.88, 0.70, false, 0.12, 0.92),
        (0.83, 0.79, 0.85, 0.70, true, 0.11, 0.93),
        (0.83, 0.76, 0.82, 0.68, true, 0.13, 0.90),
        (0.82, 0.78, 0.84, 0.68, false, 0.10, 0.92),
        (0.81, 0.77, 0.83, 0.62, false, 0.06, 0.89),
        (0.84, 0.79, 0.84, 0.72, true, 0.03, 0.89),
        (0.79, 0.76, 0.81, 0.65, true, 0.07, 0.86),
    ];
    VALUES
        .iter()
        .enumerate()
        .map(|(i, &(accuracy, precision, f1, data, k_anonymized, cdd, recall))| {
            let set_id = i as u32 + 1;
            // The demo enumeration varies explainability fastest, then the
            // coupled minimization/qualification pair, then discrimination.
            let nd = 1 + i as u32 / 4;
            let dm = 1 + (i as u32 / 2) % 2;
            let ex = 1 + i as u32 % 2;
            let signature = format!(
                "non-discrimination({nd}) data-minimization({dm}) \
                 personal-data-qualification({dm}) aml-explainability({ex}) \
                 aml-risk-coverage(1)"
            );
            let metrics = RecordMetrics {
                accuracy,
                precision,
                recall,
                f1,
                data_used_fraction: data,
                k_anonymized,
                achieved_k: k_anonymized.then_some(7),
                cdd,
                risk: if k_anonymized { RiskCategory::VeryLow } else { RiskCategory::Low },
                explainability: if ex == 1 {
                    Explainability::Moderate
                } else {
                    Explainability::High
                },
            };
            TradeoffRecord::ok(set_id, signature, metrics)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setform::enumerate_sets;

    #[test]
    fn demo_spec_parses_and_enumerates_eight_sets() {
        let spec = demo_spec();
        let sets = enumerate_sets(&spec).unwrap();
        assert_eq!(sets.len(), 8);
    }

    #[test]
    fn record_signatures_match_the_enumerated_sets() {
        let spec = demo_spec();
        let sets = enumerate_sets(&spec).unwrap();
        let records = illustrative_records();
        assert_eq!(records.len(), sets.len());
        for (record, set) in records.iter().zip(&sets) {
            assert_eq!(record.set_id, set.set_id);
            assert_eq!(record.signature, set.signature());
        }
    }

    #[test]
    fn anonymized_sets_carry_the_demo_k() {
        let records = illustrative_records();
        for r in &records {
            let m = r.metrics().unwrap();
            assert_eq!(m.k_anonymized, [3, 4, 7, 8].contains(&r.set_id));
            assert_eq!(m.achieved_k, m.k_anonymized.then_some(7));
        }
    }
}
