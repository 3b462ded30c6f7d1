//! Post-hoc reject-option adjustment: predictions the model is least sure
//! about are overridden in favor of the unprivileged group.
//!
//! A prediction with confidence `max(p, 1-p) <= theta` falls in the critical
//! region. There, unprivileged rows receive the favorable outcome (0, not
//! flagged) and privileged rows the adverse one (1). Outside the region the
//! plain 0.5 threshold applies. `tune_theta` scans a fixed grid and keeps
//! the theta that minimizes a caller-supplied discrimination score subject
//! to a recall-drop budget.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RejectError {
    #[error("no positive labels: recall constraint is undefined")]
    NoPositives,
    #[error("recall budget must be non-negative, got {0}")]
    BadEpsilon(f64),
    #[error("no theta on the grid keeps the recall drop within {epsilon}")]
    NoFeasibleTheta { epsilon: f64, candidates: Vec<ThetaCandidate> },
}

/// One grid point of the tuning scan, kept for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaCandidate {
    pub theta: f64,
    pub abs_discrimination: f64,
    pub recall: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaChoice {
    pub theta: f64,
    pub abs_discrimination: f64,
    pub recall: f64,
    pub base_recall: f64,
    pub candidates: Vec<ThetaCandidate>,
}

/// Thresholds probabilities at 0.5, then overrides the critical region.
pub fn apply_reject(probs: &[f64], unprivileged: &[bool], theta: f64) -> Vec<u8> {
    assert_eq!(probs.len(), unprivileged.len(), "one group flag per probability");
    probs
        .iter()
        .zip(unprivileged)
        .map(|(&p, &unpriv)| {
            let confidence = p.max(1.0 - p);
            if confidence <= theta {
                u8::from(!unpriv)
            } else {
                u8::from(p >= 0.5)
            }
        })
        .collect()
}

fn recall(preds: &[u8], labels: &[u8]) -> f64 {
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let hits = preds
        .iter()
        .zip(labels)
        .filter(|&(&p, &l)| l == 1 && p == 1)
        .count();
    hits as f64 / positives as f64
}

/// The theta grid: 0.55 to 1.00 in steps of 0.05.
pub fn theta_grid() -> Vec<f64> {
    (11..=20).map(|i| i as f64 * 0.05).collect()
}

/// Picks the grid theta with the smallest `score_of(preds)` among those
/// whose recall is within `epsilon` of the unadjusted recall. Ties go to
/// the smallest theta (the mildest intervention).
pub fn tune_theta(
    probs: &[f64],
    unprivileged: &[bool],
    labels: &[u8],
    epsilon: f64,
    score_of: &dyn Fn(&[u8]) -> f64,
) -> Result<ThetaChoice, RejectError> {
    assert_eq!(probs.len(), labels.len(), "one label per probability");
    if epsilon < 0.0 {
        return Err(RejectError::BadEpsilon(epsilon));
    }
    if !labels.contains(&1) {
        return Err(RejectError::NoPositives);
    }
    let base_preds: Vec<u8> = probs.iter().map(|&p| u8::from(p >= 0.5)).collect();
    let base_recall = recall(&base_preds, labels);

    let mut candidates = Vec::new();
    let mut best: Option<ThetaCandidate> = None;
    for theta in theta_grid() {
        let preds = apply_reject(probs, unprivileged, theta);
        let r = recall(&preds, labels);
        // Small slack so an exactly-epsilon drop is not rejected to rounding.
        let feasible = base_recall - r <= epsilon + 1e-12;
        let candidate = ThetaCandidate {
            theta,
            abs_discrimination: score_of(&preds),
            recall: r,
            feasible,
        };
        if feasible
            && best
                .as_ref()
                .is_none_or(|b| candidate.abs_discrimination < b.abs_discrimination)
        {
            best = Some(candidate.clone());
        }
        candidates.push(candidate);
    }
    match best {
        Some(b) => Ok(ThetaChoice {
            theta: b.theta,
            abs_discrimination: b.abs_discrimination,
            recall: b.recall,
            base_recall,
            candidates,
        }),
        None => Err(RejectError::NoFeasibleTheta { epsilon, candidates }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn critical_region_overrides_by_group() {
        let preds = apply_reject(&[0.52, 0.48], &[true, false], 0.55);
        assert_eq!(preds, vec![0, 1]);
        // Outside the region the plain threshold applies.
        let preds = apply_reject(&[0.52, 0.48], &[true, false], 0.51);
        assert_eq!(preds, vec![1, 0]);
    }

    #[test]
    fn theta_one_overrides_every_prediction() {
        let probs = [0.99, 0.01, 0.7, 0.3];
        let unpriv = [true, false, false, true];
        let preds = apply_reject(&probs, &unpriv, 1.0);
        assert_eq!(preds, vec![0, 1, 1, 0]);
    }

    #[test]
    fn grid_covers_055_to_100_in_005_steps() {
        let grid = theta_grid();
        assert_eq!(grid.len(), 10);
        assert!((grid[0] - 0.55).abs() < 1e-12);
        assert!((grid[9] - 1.0).abs() < 1e-12);
        for w in grid.windows(2) {
            assert!((w[1] - w[0] - 0.05).abs() < 1e-12);
        }
    }

    /// Mean prediction gap between groups; stands in for the full
    /// discrimination measure in these tests.
    fn gap(unpriv: Vec<bool>) -> impl Fn(&[u8]) -> f64 {
        move |preds: &[u8]| {
            let mean = |want: bool| {
                let sel: Vec<f64> = preds
                    .iter()
                    .zip(&unpriv)
                    .filter(|(_, &u)| u == want)
                    .map(|(&p, _)| p as f64)
                    .collect();
                sel.iter().sum::<f64>() / sel.len() as f64
            };
            (mean(true) - mean(false)).abs()
        }
    }

    #[test]
    fn tuning_picks_the_theta_that_removes_the_gap() {
        let probs = [0.60, 0.52, 0.95, 0.05];
        let unpriv = [true, true, false, false];
        let labels = [1, 0, 1, 0];
        let score = gap(unpriv.to_vec());
        let choice = tune_theta(&probs, &unpriv, &labels, 0.0, &score).unwrap();
        // At 0.55 only the 0.52 row is overridden: the gap closes and both
        // true positives survive. Larger thetas override a true positive.
        assert_eq!(choice.theta, 0.55);
        assert_eq!(choice.abs_discrimination, 0.0);
        assert_eq!(choice.recall, 1.0);
        assert_eq!(choice.base_recall, 1.0);
        assert_eq!(choice.candidates.len(), 10);
        assert!(choice.candidates.iter().filter(|c| c.feasible).count() >= 1);
    }

    #[test]
    fn ties_resolve_to_the_smallest_theta() {
        // All confident: every theta below 0.95 leaves predictions alone.
        let probs = [0.99, 0.01, 0.98, 0.02];
        let unpriv = [true, false, true, false];
        let labels = [1, 0, 1, 0];
        let score = gap(unpriv.to_vec());
        let choice = tune_theta(&probs, &unpriv, &labels, 0.0, &score).unwrap();
        assert_eq!(choice.theta, 0.55);
    }

    #[test]
    fn reports_all_candidates_when_nothing_is_feasible() {
        // Both rows are positives of the unprivileged group at low
        // confidence: any override loses recall.
        let probs = [0.51, 0.52];
        let unpriv = [true, true];
        let labels = [1, 1];
        let score = gap(unpriv.to_vec());
        let err = tune_theta(&probs, &unpriv, &labels, 0.0, &score).unwrap_err();
        match err {
            RejectError::NoFeasibleTheta { epsilon, candidates } => {
                assert_eq!(epsilon, 0.0);
                assert_eq!(candidates.len(), 10);
                assert!(candidates.iter().all(|c| !c.feasible));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn no_positive_labels_is_an_error() {
        let score = gap(vec![true, false]);
        let err = tune_theta(&[0.9, 0.1], &[true, false], &[0, 0], 0.1, &score).unwrap_err();
        assert_eq!(err, RejectError::NoPositives);
    }

    #[test]
    fn negative_epsilon_is_rejected() {
        let score = gap(vec![true]);
        let err = tune_theta(&[0.9], &[true], &[1], -0.01, &score).unwrap_err();
        assert_eq!(err, RejectError::BadEpsilon(-0.01));
    }

    proptest! {
        /// Once a row is overridden at some theta, every larger theta keeps
        /// overriding it the same way: the critical region only grows.
        #[test]
        fn critical_region_grows_with_theta(
            probs in proptest::collection::vec(0.0f64..=1.0, 1..40),
            flags in proptest::collection::vec(any::<bool>(), 40),
            lo in 0usize..9,
        ) {
            let flags = &flags[..probs.len()];
            let grid = theta_grid();
            let (t1, t2) = (grid[lo], grid[lo + 1]);
            let p1 = apply_reject(&probs, flags, t1);
            let p2 = apply_reject(&probs, flags, t2);
            for i in 0..probs.len() {
                let confidence = probs[i].max(1.0 - probs[i]);
                if confidence <= t1 {
                    prop_assert_eq!(p1[i], u8::from(!flags[i]));
                    prop_assert_eq!(p2[i], p1[i]);
                }
            }
        }
    }
}
