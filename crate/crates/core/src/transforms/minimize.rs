//! Data minimization by accumulating training data until more data stops
//! paying for itself.
//!
//! The training pool is shuffled once (seeded), then consumed in batches.
//! After each batch a probe model is trained on everything accumulated so
//! far and scored on a fixed validation split. Once the trailing
//! per-sample loss slope flattens past the stopping threshold — or the
//! pool runs out — the loop stops and reports the subset plus a full
//! decision trace, so "how much data was enough" is auditable after the
//! fact.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Dataset;
use crate::seeding::stream_rng;
use crate::transforms::PerformanceProbe;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeConfig {
    /// Strictly negative per-sample slope; accumulation stops once the
    /// trailing slope rises to or above it. `f64::NEG_INFINITY` disables
    /// the rule entirely, so the whole pool is used.
    pub stopping_threshold: f64,
    pub batch_size: usize,
    /// Trailing window (in steps) the slope is measured over.
    pub window: usize,
    pub seed: u64,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig { stopping_threshold: -1e-7, batch_size: 500, window: 3, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// The loss-improvement rate flattened past the threshold.
    SlopeThreshold,
    /// Every pool row was consumed before the rule fired.
    PoolExhausted,
}

/// One accumulation step: how much data the probe saw and what it scored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizationStep {
    pub step: u32,
    pub rows_used: usize,
    pub validation_loss: f64,
    /// Per-sample slope over the trailing window; absent until enough
    /// steps exist.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizationTrace {
    pub steps: Vec<MinimizationStep>,
    pub stop_reason: StopReason,
    pub rows_used: usize,
    pub pool_size: usize,
    /// rows_used / pool_size.
    pub fraction_used: f64,
    pub stopping_threshold: f64,
    pub batch_size: usize,
    pub window: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum MinimizeError {
    #[error("training pool is empty")]
    EmptyPool,
    #[error("invalid minimization config: {0}")]
    BadConfig(String),
    #[error("probe failed at step {step} ({rows_used} rows): {message}")]
    ProbeFailed { step: u32, rows_used: usize, message: String },
}

/// Runs the accumulation loop and returns the retained subset (pool order
/// preserved) together with its trace.
pub fn minimize(
    pool: &Dataset,
    probe: &dyn PerformanceProbe,
    config: &MinimizeConfig,
) -> Result<(Dataset, MinimizationTrace), MinimizeError> {
    if pool.n_rows() == 0 {
        return Err(MinimizeError::EmptyPool);
    }
    if config.batch_size < 1 {
        return Err(MinimizeError::BadConfig("batch_size must be ≥ 1".to_string()));
    }
    if config.window < 1 {
        return Err(MinimizeError::BadConfig("window must be ≥ 1".to_string()));
    }
    let t = config.stopping_threshold;
    if t.is_nan() || t >= 0.0 {
        return Err(MinimizeError::BadConfig(
            "stopping_threshold must be negative (−∞ allowed)".to_string(),
        ));
    }

    let n = pool.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = stream_rng(config.seed, 0);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }

    let mut steps: Vec<MinimizationStep> = Vec::new();
    let mut stop_reason = None;
    let mut rows_used = 0;
    let mut step = 0u32;
    while stop_reason.is_none() {
        step += 1;
        rows_used = (step as usize * config.batch_size).min(n);
        let mut subset_rows = order[..rows_used].to_vec();
        subset_rows.sort_unstable();
        let subset = pool.select_rows(&subset_rows);
        let loss = probe
            .validation_loss(&subset)
            .map_err(|message| MinimizeError::ProbeFailed { step, rows_used, message })?;

        // Per-sample slope over the trailing window, in nominal batch
        // units so a short final batch doesn't distort the rate.
        let slope = (steps.len() >= config.window).then(|| {
            let prev = steps[steps.len() - config.window].validation_loss;
            (loss - prev) / (config.window * config.batch_size) as f64
        });
        steps.push(MinimizationStep { step, rows_used, validation_loss: loss, slope });

        // −∞ disables the rule outright; otherwise any slope at or above
        // the threshold means more data no longer pays off.
        if config.stopping_threshold.is_finite() {
            if let Some(s) = slope {
                if s >= config.stopping_threshold {
                    stop_reason = Some(StopReason::SlopeThreshold);
                }
            }
        }
        if stop_reason.is_none() && rows_used == n {
            stop_reason = Some(StopReason::PoolExhausted);
        }
    }

    let mut subset_rows = order[..rows_used].to_vec();
    subset_rows.sort_unstable();
    let mut subset = pool.select_rows(&subset_rows);
    let trace = MinimizationTrace {
        steps,
        stop_reason: stop_reason.expect("loop sets a reason"),
        rows_used,
        pool_size: n,
        fraction_used: rows_used as f64 / n as f64,
        stopping_threshold: config.stopping_threshold,
        batch_size: config.batch_size,
        window: config.window,
    };
    subset.push_provenance(format!(
        "minimized: kept {} of {} rows ({:?})",
        trace.rows_used, trace.pool_size, trace.stop_reason
    ));
    Ok((subset, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;

    use crate::domain::{Cell, Dataset, FeatureDef, FeatureKind, FeatureRole};

    fn pool(n: usize) -> Dataset {
        let mut d = Dataset::new(vec![
            FeatureDef::new("x", FeatureKind::Numeric, FeatureRole::Feature),
            FeatureDef::new("y", FeatureKind::Categorical, FeatureRole::Label),
        ]);
        for i in 0..n {
            d.rows.push(vec![Cell::Num(i as f64), Cell::Text("0".into())]);
        }
        d
    }

    /// Probe whose loss is a pure function of subset size; records the
    /// sizes it was asked about.
    struct ScriptedProbe<F: Fn(usize) -> f64> {
        loss: F,
        seen: RefCell<Vec<usize>>,
    }

    impl<F: Fn(usize) -> f64> ScriptedProbe<F> {
        fn new(loss: F) -> Self {
            ScriptedProbe { loss, seen: RefCell::new(Vec::new()) }
        }
    }

    impl<F: Fn(usize) -> f64> PerformanceProbe for ScriptedProbe<F> {
        fn validation_loss(&self, train_subset: &Dataset) -> Result<f64, String> {
            self.seen.borrow_mut().push(train_subset.n_rows());
            Ok((self.loss)(train_subset.n_rows()))
        }
    }

    fn config(threshold: f64, batch: usize) -> MinimizeConfig {
        MinimizeConfig { stopping_threshold: threshold, batch_size: batch, window: 3, seed: 9 }
    }

    #[test]
    fn constant_loss_stops_at_first_measurable_slope() {
        let probe = ScriptedProbe::new(|_| 1.0);
        let (subset, trace) = minimize(&pool(1000), &probe, &config(-1e-7, 100)).unwrap();
        // Slope first defined at step window+1 = 4, and it is 0 ≥ threshold.
        assert_eq!(trace.stop_reason, StopReason::SlopeThreshold);
        assert_eq!(trace.rows_used, 400);
        assert_eq!(subset.n_rows(), 400);
        assert_eq!(trace.steps.len(), 4);
        assert!(trace.steps[..3].iter().all(|s| s.slope.is_none()));
        assert_eq!(trace.steps[3].slope, Some(0.0));
        assert!((trace.fraction_used - 0.4).abs() < 1e-12);
    }

    #[test]
    fn disabled_rule_consumes_the_whole_pool() {
        let probe = ScriptedProbe::new(|n| 1.0 / (n as f64 + 1.0));
        let (subset, trace) = minimize(&pool(1000), &probe, &config(f64::NEG_INFINITY, 300)).unwrap();
        assert_eq!(trace.stop_reason, StopReason::PoolExhausted);
        assert_eq!(trace.rows_used, 1000);
        assert_eq!(subset.n_rows(), 1000);
        assert_eq!(trace.fraction_used, 1.0);
        // Final short batch: 300, 600, 900, 1000.
        assert_eq!(trace.steps.last().unwrap().rows_used, 1000);
    }

    #[test]
    fn steep_descent_keeps_consuming_until_it_flattens() {
        // Loss falls fast for the first 600 rows, then plateaus.
        let probe = ScriptedProbe::new(|n| if n <= 600 { 2.0 - 0.002 * n as f64 } else { 0.8 });
        let (_, trace) = minimize(&pool(2000), &probe, &config(-1e-7, 100)).unwrap();
        assert_eq!(trace.stop_reason, StopReason::SlopeThreshold);
        assert!(trace.rows_used < 2000, "stopped before exhaustion");
        assert!(trace.rows_used >= 600, "kept consuming through the descent");
        // Every earlier measured slope was steeper than the threshold.
        let measured: Vec<f64> = trace.steps.iter().filter_map(|s| s.slope).collect();
        for s in &measured[..measured.len() - 1] {
            assert!(*s < -1e-7, "{measured:?}");
        }
    }

    #[test]
    fn subsets_grow_by_prefix() {
        let probe = ScriptedProbe::new(|n| 1.0 / (n as f64 + 1.0));
        minimize(&pool(900), &probe, &config(f64::NEG_INFINITY, 200)).unwrap();
        let seen = probe.seen.borrow();
        assert_eq!(*seen, vec![200, 400, 600, 800, 900]);
    }

    #[test]
    fn trace_is_deterministic_for_a_seed() {
        let probe = ScriptedProbe::new(|n| (n as f64).recip());
        let a = minimize(&pool(500), &probe, &config(-1e-6, 100)).unwrap();
        let b = minimize(&pool(500), &probe, &config(-1e-6, 100)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let probe = ScriptedProbe::new(|_| 1.0);
        let cases = [
            MinimizeConfig { stopping_threshold: 0.0, ..config(-1.0, 10) },
            MinimizeConfig { stopping_threshold: 1e-3, ..config(-1.0, 10) },
            MinimizeConfig { stopping_threshold: f64::NAN, ..config(-1.0, 10) },
            MinimizeConfig { batch_size: 0, ..config(-1.0, 10) },
            MinimizeConfig { window: 0, ..config(-1.0, 10) },
        ];
        for c in cases {
            assert!(minimize(&pool(100), &probe, &c).is_err(), "{c:?}");
        }
        assert!(matches!(
            minimize(&pool(0), &probe, &config(-1.0, 10)),
            Err(MinimizeError::EmptyPool)
        ));
    }

    proptest::proptest! {
        /// Loosening the threshold toward 0 can only consume more data:
        /// the set of stopping steps shrinks as the threshold rises.
        #[test]
        fn fraction_used_is_monotone_in_threshold(
            exp_a in -9.0f64..-1.0,
            exp_b in -9.0f64..-1.0,
            decay in 0.001f64..0.1,
        ) {
            let probe = ScriptedProbe::new(move |n| (-decay * n as f64).exp());
            let ta = -(10f64.powf(exp_a));
            let tb = -(10f64.powf(exp_b));
            let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            let f_lo = minimize(&pool(600), &probe, &config(lo, 50)).unwrap().1.fraction_used;
            let f_hi = minimize(&pool(600), &probe, &config(hi, 50)).unwrap().1.fraction_used;
            proptest::prop_assert!(f_lo <= f_hi, "f({lo}) = {f_lo} > f({hi}) = {f_hi}");
        }
    }
}
