//! Dataset transforms applied before model training: visibility drops,
//! class weighting, k-anonymization, and data minimization.

pub mod anonymize;
pub mod minimize;

use crate::domain::{DataError, Dataset, FeatureRole, WeightPolicy};

pub use anonymize::{fit_generalization, verify_k_anonymity, AnonError, GeneralizationMap};
pub use minimize::{
    minimize, MinimizationStep, MinimizationTrace, MinimizeConfig, MinimizeError, StopReason,
};

/// Removes columns from model visibility by flipping their role to
/// excluded. Values stay in the dataset so evaluation metrics (which may
/// legitimately need a dropped protected attribute) can still read them.
/// Dropping an already-dropped column is a no-op, so the call is
/// idempotent.
pub fn drop_features(dataset: &mut Dataset, names: &[String]) -> Result<(), DataError> {
    for name in names {
        let ix = dataset.feature_index(name)?;
        if dataset.features[ix].role == FeatureRole::Label {
            return Err(DataError::UnknownFeature(format!("{name} (cannot drop the label)")));
        }
        dataset.features[ix].role = FeatureRole::Excluded;
    }
    dataset.push_provenance(format!("hidden from models: {}", names.join(", ")));
    Ok(())
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum WeightError {
    #[error("cannot balance classes: no positive rows")]
    NoPositives,
}

/// Per-row training weights from a weighting policy. Balanced weighting
/// gives each positive row weight (#negatives / #positives) so both classes
/// contribute equal total mass.
pub fn class_weights(labels: &[u8], policy: &WeightPolicy) -> Result<Vec<f64>, WeightError> {
    let positive_weight = match policy {
        WeightPolicy::Balanced => {
            let n_pos = labels.iter().filter(|&&l| l == 1).count();
            if n_pos == 0 {
                return Err(WeightError::NoPositives);
            }
            (labels.len() - n_pos) as f64 / n_pos as f64
        }
        WeightPolicy::Fixed { positive_weight } => *positive_weight,
    };
    Ok(labels.iter().map(|&l| if l == 1 { positive_weight } else { 1.0 }).collect())
}

/// Anything that can train a throwaway model on a training subset and
/// report its loss on a fixed validation split. The minimization loop is
/// generic over this so it never depends on a concrete model family.
pub trait PerformanceProbe {
    fn validation_loss(&self, train_subset: &Dataset) -> Result<f64, String>;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Cell, FeatureDef, FeatureKind};

    fn toy() -> Dataset {
        let mut d = Dataset::new(vec![
            FeatureDef::new("a", FeatureKind::Numeric, FeatureRole::Feature),
            FeatureDef::new("b", FeatureKind::Categorical, FeatureRole::Protected),
            FeatureDef::new("y", FeatureKind::Categorical, FeatureRole::Label),
        ]);
        d.rows.push(vec![Cell::Num(1.0), Cell::Text("x".into()), Cell::Text("0".into())]);
        d.rows.push(vec![Cell::Num(2.0), Cell::Text("y".into()), Cell::Text("1".into())]);
        d
    }

    #[test]
    fn drop_hides_but_keeps_values() {
        let mut d = toy();
        drop_features(&mut d, &["b".to_string()]).unwrap();
        assert_eq!(d.visible_features().len(), 1);
        assert_eq!(d.column_strings("b").unwrap(), vec!["x", "y"]);
        // Idempotent: a second drop changes nothing structural.
        let features = d.features.clone();
        drop_features(&mut d, &["b".to_string()]).unwrap();
        assert_eq!(d.features, features);
    }

    #[test]
    fn drop_refuses_label_and_unknown_columns() {
        let mut d = toy();
        assert!(drop_features(&mut d, &["y".to_string()]).is_err());
        assert!(drop_features(&mut d, &["nope".to_string()]).is_err());
    }

    #[test]
    fn balanced_weights_equalize_class_mass() {
        let labels = [0, 0, 0, 1, 0, 0, 0, 0, 0, 1];
        let w = class_weights(&labels, &WeightPolicy::Balanced).unwrap();
        assert_eq!(w[3], 4.0);
        assert_eq!(w[0], 1.0);
        let pos: f64 = labels.iter().zip(&w).filter(|(l, _)| **l == 1).map(|(_, w)| w).sum();
        let neg: f64 = labels.iter().zip(&w).filter(|(l, _)| **l == 0).map(|(_, w)| w).sum();
        assert_eq!(pos, neg);
    }

    #[test]
    fn balanced_weights_need_positives() {
        assert_eq!(class_weights(&[0, 0], &WeightPolicy::Balanced), Err(WeightError::NoPositives));
    }

    #[test]
    fn fixed_weights_apply_verbatim() {
        let w = class_weights(&[0, 1], &WeightPolicy::Fixed { positive_weight: 5.0 }).unwrap();
        assert_eq!(w, vec![1.0, 5.0]);
    }
}
