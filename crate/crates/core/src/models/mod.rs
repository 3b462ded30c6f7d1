//! Model families and the shared surface the pipeline trains against.
//!
//! Logistic regression runs on the sparse one-hot/standardized encoding;
//! the random forest consumes raw columns directly. `TrainedModel` hides
//! that difference from callers, and `FamilyProbe` adapts either family to
//! the `PerformanceProbe` contract used by training-data minimization.

pub mod encode;
pub mod forest;
pub mod logreg;
pub mod reject;

pub use encode::{Encoder, EncodeError, SparseMatrix};
pub use forest::{Forest, ForestError};
pub use logreg::LogReg;
pub use reject::{apply_reject, theta_grid, tune_theta, RejectError, ThetaCandidate, ThetaChoice};

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, HyperParams, ModelFamily};
use crate::transforms::PerformanceProbe;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainedModel {
    LogReg { encoder: Encoder, model: LogReg },
    Forest(Forest),
}

/// Trains one model of the requested family. The seed only matters for the
/// forest's bootstrap; logistic regression is deterministic by itself.
pub fn train_family(
    family: ModelFamily,
    train: &Dataset,
    labels: &[u8],
    sample_weights: &[f64],
    hyper: &HyperParams,
    seed: u64,
) -> Result<TrainedModel, ModelError> {
    match family {
        ModelFamily::Logreg => {
            let encoder = encode::fit(train)?;
            let x = encoder.transform(train)?;
            let model = logreg::train(&x, labels, sample_weights, &hyper.logreg);
            Ok(TrainedModel::LogReg { encoder, model })
        }
        ModelFamily::Forest => Ok(TrainedModel::Forest(forest::train(
            train,
            labels,
            sample_weights,
            &hyper.forest,
            seed,
        )?)),
    }
}

impl TrainedModel {
    pub fn predict_proba(&self, data: &Dataset) -> Result<Vec<f64>, ModelError> {
        match self {
            TrainedModel::LogReg { encoder, model } => {
                let x = encoder.transform(data)?;
                Ok(model.predict_proba(&x))
            }
            TrainedModel::Forest(f) => Ok(f.predict_proba(data)?),
        }
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            TrainedModel::LogReg { .. } => ModelFamily::Logreg,
            TrainedModel::Forest(_) => ModelFamily::Forest,
        }
    }
}

/// Mean binary cross-entropy of probabilities against labels, with the
/// probabilities clamped away from 0/1 so forest leaves cannot produce an
/// infinite loss.
pub fn mean_log_loss(probs: &[f64], labels: &[u8]) -> f64 {
    assert_eq!(probs.len(), labels.len(), "one label per probability");
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(1e-9, 1.0 - 1e-9);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    total / probs.len() as f64
}

/// Cheaper hyperparameters for minimization probes, which retrain many
/// times on growing subsets: fewer epochs/trees and a floor on the ridge
/// penalty keep each probe fast and stable on small subsets.
pub fn probe_hyper(full: &HyperParams) -> HyperParams {
    let mut h = *full;
    h.logreg.epochs = h.logreg.epochs.min(300);
    h.logreg.l2 = h.logreg.l2.max(1e-3);
    h.forest.n_trees = h.forest.n_trees.min(30);
    h
}

/// Retrains the configured family on each candidate subset and scores it by
/// validation log loss. Probes use unit sample weights: they measure how
/// much data the model needs, independent of the class-weight policy.
pub struct FamilyProbe<'a> {
    pub family: ModelFamily,
    pub hyper: HyperParams,
    pub validation: &'a Dataset,
    pub seed: u64,
}

impl PerformanceProbe for FamilyProbe<'_> {
    fn validation_loss(&self, train_subset: &Dataset) -> Result<f64, String> {
        let labels = train_subset.labels().map_err(|e| e.to_string())?;
        let weights = vec![1.0; labels.len()];
        let model = train_family(
            self.family,
            train_subset,
            &labels,
            &weights,
            &self.hyper,
            self.seed,
        )
        .map_err(|e| e.to_string())?;
        let probs = model
            .predict_proba(self.validation)
            .map_err(|e| e.to_string())?;
        let val_labels = self.validation.labels().map_err(|e| e.to_string())?;
        Ok(mean_log_loss(&probs, &val_labels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SplitFractions;
    use crate::synthgen::{generate, split, GenConfig};

    fn small_split() -> (Dataset, Dataset) {
        let config = GenConfig { n_rows: 400, ..Default::default() };
        let data = generate(&config).unwrap();
        let parts = split(
            &data,
            &SplitFractions { train: 0.6, validation: 0.2, test: 0.2 },
            9,
        )
        .unwrap();
        (parts.train, parts.validation)
    }

    #[test]
    fn both_families_train_and_emit_probabilities() {
        let (train, validation) = small_split();
        let labels = train.labels().unwrap();
        let weights = vec![1.0; labels.len()];
        let hyper = probe_hyper(&HyperParams::default());
        for family in [ModelFamily::Logreg, ModelFamily::Forest] {
            let model = train_family(family, &train, &labels, &weights, &hyper, 3).unwrap();
            assert_eq!(model.family(), family);
            let probs = model.predict_proba(&validation).unwrap();
            assert_eq!(probs.len(), validation.n_rows());
            assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn log_loss_matches_a_hand_computation() {
        let probs = [0.9, 0.2];
        let labels = [1, 0];
        let expected = (-(0.9f64.ln()) + -(0.8f64.ln())) / 2.0;
        assert!((mean_log_loss(&probs, &labels) - expected).abs() < 1e-12);
        // Clamping keeps a confidently wrong prediction finite.
        assert!(mean_log_loss(&[1.0], &[0]).is_finite());
    }

    #[test]
    fn probe_hyper_only_shrinks_the_budget() {
        let full = HyperParams::default();
        let probe = probe_hyper(&full);
        assert!(probe.logreg.epochs <= full.logreg.epochs);
        assert!(probe.forest.n_trees <= full.forest.n_trees);
        assert!(probe.logreg.l2 >= full.logreg.l2);
        assert_eq!(probe.forest.max_depth, full.forest.max_depth);
    }

    #[test]
    fn probe_loss_is_finite_and_deterministic() {
        let (train, validation) = small_split();
        let hyper = probe_hyper(&HyperParams::default());
        for family in [ModelFamily::Logreg, ModelFamily::Forest] {
            let probe = FamilyProbe { family, hyper, validation: &validation, seed: 5 };
            let a = probe.validation_loss(&train).unwrap();
            let b = probe.validation_loss(&train).unwrap();
            assert!(a.is_finite() && a > 0.0);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn more_probe_data_does_not_hurt_the_forest_badly() {
        // Sanity: training on the full pool should not be wildly worse than
        // a small prefix. Guards against probes being wired backwards.
        let (train, validation) = small_split();
        let hyper = probe_hyper(&HyperParams::default());
        let probe = FamilyProbe {
            family: ModelFamily::Logreg,
            hyper,
            validation: &validation,
            seed: 5,
        };
        let small = probe.validation_loss(&train.select_rows(&(0..60).collect::<Vec<_>>())).unwrap();
        let full = probe.validation_loss(&train).unwrap();
        assert!(full <= small + 0.25, "full {full} vs small {small}");
    }
}
