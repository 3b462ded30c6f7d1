//! Logistic regression on sparse features, trained by full-batch gradient
//! descent from a zero initialization — no randomness, so identical inputs
//! always yield identical models.
//!
//! The objective is weight-normalized cross-entropy plus an L2 penalty on
//! the non-intercept weights:
//!
//! L(w, b) = Σᵢ sᵢ·bce(σ(w·xᵢ + b), yᵢ) / Σᵢ sᵢ + (λ/2)·‖w‖²
//!
//! Normalizing by total sample weight keeps the gradient scale — and
//! therefore the usable learning rate — independent of how class weights
//! are scaled.

use serde::{Deserialize, Serialize};

use crate::domain::LogRegHyper;
use crate::models::encode::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogReg {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Numerically stable ln(1 + e^z).
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn logit(x: &SparseMatrix, row: usize, weights: &[f64], intercept: f64) -> f64 {
    x.rows[row].iter().map(|(s, v)| weights[*s as usize] * v).sum::<f64>() + intercept
}

/// Loss and its exact gradient at (weights, intercept). Public so the
/// gradient can be verified independently against finite differences.
pub fn loss_and_grad(
    x: &SparseMatrix,
    y: &[u8],
    sample_weights: &[f64],
    weights: &[f64],
    intercept: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let total_weight: f64 = sample_weights.iter().sum();
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; x.dim];
    let mut grad_b = 0.0;
    for r in 0..x.rows.len() {
        let z = logit(x, r, weights, intercept);
        let p = sigmoid(z);
        let yf = y[r] as f64;
        let s = sample_weights[r];
        // bce = softplus(z) − y·z, stable for large |z|.
        loss += s * (softplus(z) - yf * z);
        let residual = s * (p - yf);
        for (slot, v) in &x.rows[r] {
            grad_w[*slot as usize] += residual * v;
        }
        grad_b += residual;
    }
    loss /= total_weight;
    grad_b /= total_weight;
    for g in &mut grad_w {
        *g /= total_weight;
    }
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g += l2 * w;
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad_w, grad_b)
}

/// Trains by deterministic full-batch gradient descent.
pub fn train(x: &SparseMatrix, y: &[u8], sample_weights: &[f64], hyper: &LogRegHyper) -> LogReg {
    assert_eq!(x.rows.len(), y.len(), "one label per row");
    assert_eq!(x.rows.len(), sample_weights.len(), "one weight per row");
    let mut model = LogReg { weights: vec![0.0; x.dim], intercept: 0.0 };
    for _ in 0..hyper.epochs {
        let (_, grad_w, grad_b) =
            loss_and_grad(x, y, sample_weights, &model.weights, model.intercept, hyper.l2);
        for (w, g) in model.weights.iter_mut().zip(&grad_w) {
            *w -= hyper.learning_rate * g;
        }
        model.intercept -= hyper.learning_rate * grad_b;
    }
    model
}

impl LogReg {
    pub fn predict_proba(&self, x: &SparseMatrix) -> Vec<f64> {
        (0..x.rows.len()).map(|r| sigmoid(logit(x, r, &self.weights, self.intercept))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::seeding::stream_rng;

    fn random_problem(
        n: usize,
        dim: usize,
        seed: u64,
    ) -> (SparseMatrix, Vec<u8>, Vec<f64>, Vec<f64>) {
        let mut rng = stream_rng(seed, 0);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        let mut sw = Vec::new();
        for _ in 0..n {
            let mut row = Vec::new();
            for s in 0..dim {
                if rng.gen::<f64>() < 0.6 {
                    row.push((s as u32, rng.gen_range(-2.0..2.0)));
                }
            }
            rows.push(row);
            y.push(u8::from(rng.gen::<f64>() < 0.4));
            sw.push(rng.gen_range(0.5..3.0));
        }
        let weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (SparseMatrix { rows, dim }, y, sw, weights)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y, sw, mut weights) = random_problem(40, 6, 17);
        let intercept = 0.3;
        let l2 = 0.01;
        let (_, grad_w, grad_b) = loss_and_grad(&x, &y, &sw, &weights, intercept, l2);
        let h = 1e-6;
        for d in 0..weights.len() {
            let orig = weights[d];
            weights[d] = orig + h;
            let (lp, _, _) = loss_and_grad(&x, &y, &sw, &weights, intercept, l2);
            weights[d] = orig - h;
            let (lm, _, _) = loss_and_grad(&x, &y, &sw, &weights, intercept, l2);
            weights[d] = orig;
            let fd = (lp - lm) / (2.0 * h);
            assert!(
                (fd - grad_w[d]).abs() < 1e-6,
                "slot {d}: finite difference {fd} vs analytic {}",
                grad_w[d]
            );
        }
        let (lp, _, _) = loss_and_grad(&x, &y, &sw, &weights, intercept + h, l2);
        let (lm, _, _) = loss_and_grad(&x, &y, &sw, &weights, intercept - h, l2);
        let fd_b = (lp - lm) / (2.0 * h);
        assert!((fd_b - grad_b).abs() < 1e-6, "intercept: {fd_b} vs {grad_b}");
    }

    #[test]
    fn separable_data_is_learned() {
        // One feature, threshold at 0: negatives below, positives above.
        let rows: Vec<Vec<(u32, f64)>> =
            (-10..10).map(|i| vec![(0u32, i as f64 / 2.0)]).collect();
        let y: Vec<u8> = (-10..10).map(|i| u8::from(i >= 0)).collect();
        let sw = vec![1.0; y.len()];
        let x = SparseMatrix { rows, dim: 1 };
        let hyper = LogRegHyper { learning_rate: 0.5, epochs: 500, l2: 0.0 };
        let model = train(&x, &y, &sw, &hyper);
        let probs = model.predict_proba(&x);
        let preds: Vec<u8> = probs.iter().map(|p| u8::from(*p >= 0.5)).collect();
        assert_eq!(preds, y);
        assert!(model.weights[0] > 0.0);
    }

    #[test]
    fn doubling_all_sample_weights_changes_nothing() {
        let (x, y, sw, _) = random_problem(60, 5, 3);
        let doubled: Vec<f64> = sw.iter().map(|w| w * 2.0).collect();
        let hyper = LogRegHyper { learning_rate: 0.2, epochs: 200, l2: 1e-3 };
        let a = train(&x, &y, &sw, &hyper);
        let b = train(&x, &y, &doubled, &hyper);
        // Doubling is exact in binary floating point, and the objective
        // normalizes by total weight, so the models match bit for bit.
        assert_eq!(a, b);
    }

    #[test]
    fn stronger_l2_shrinks_weights() {
        let (x, y, sw, _) = random_problem(80, 6, 11);
        let strong = train(&x, &y, &sw, &LogRegHyper { learning_rate: 0.2, epochs: 400, l2: 1.0 });
        let weak = train(&x, &y, &sw, &LogRegHyper { learning_rate: 0.2, epochs: 400, l2: 1e-6 });
        let norm = |m: &LogReg| m.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm(&strong) < norm(&weak));
    }

    #[test]
    fn class_weighting_raises_positive_probabilities() {
        // Imbalanced noisy data: upweighting positives must push predicted
        // probabilities up on average.
        let (x, y, _, _) = random_problem(120, 4, 23);
        let plain = vec![1.0; y.len()];
        let boosted: Vec<f64> =
            y.iter().map(|&l| if l == 1 { 5.0 } else { 1.0 }).collect();
        let hyper = LogRegHyper { learning_rate: 0.3, epochs: 300, l2: 1e-4 };
        let a = train(&x, &y, &plain, &hyper);
        let b = train(&x, &y, &boosted, &hyper);
        let mean = |m: &LogReg| m.predict_proba(&x).iter().sum::<f64>() / y.len() as f64;
        assert!(mean(&b) > mean(&a));
    }

    proptest::proptest! {
        #[test]
        fn probabilities_stay_in_unit_interval(seed in 0u64..500) {
            let (x, y, sw, _) = random_problem(30, 4, seed);
            let hyper = LogRegHyper { learning_rate: 0.5, epochs: 50, l2: 0.0 };
            let model = train(&x, &y, &sw, &hyper);
            for p in model.predict_proba(&x) {
                proptest::prop_assert!((0.0..=1.0).contains(&p));
            }
        }
    }
}
