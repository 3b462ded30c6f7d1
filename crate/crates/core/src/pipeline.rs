//! Run orchestration: executes every operationalization set against one
//! dataset — transforms in canonical order, training, post-processing,
//! evaluation — and persists the artifact directory.
//!
//! Determinism is the organizing constraint: per-set seeds derive from
//! (spec seed, set id), so serial and parallel execution produce identical
//! records, and identical (spec, dataset) inputs produce byte-identical
//! artifacts under the same run id.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{
    validate_dataset, Dataset, ModelFamily, OperationalizationKind, RunSpec, SelectionPolicy,
    SpecError, WeightPolicy,
};
use crate::metrics::{
    build_strata_keys, cdd, confusion, explainability_category, perf_panel, risk_category,
    CddResult, Confusion, PerfPanel,
};
use crate::models::{
    apply_reject, train_family, tune_theta, FamilyProbe, ThetaChoice, TrainedModel,
};
use crate::seeding::derive_seed;
use crate::setform::{enumerate_sets, prune_sets, OperationalizationSet};
use crate::synthgen::{split, DataSplit, SplitError};
use crate::trademap::{
    build_table, pareto_front, policy_directions, render_report, select, RecordMetrics,
    ReportContext, Selection, TradeoffRecord, TradeoffTable,
};
use crate::transforms::{
    class_weights, drop_features, fit_generalization, minimize, verify_k_anonymity,
    GeneralizationMap, MinimizationTrace, MinimizeConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("specification: {0}")]
    Spec(#[from] SpecError),
    #[error("dataset does not fit the specification: {0}")]
    Dataset(String),
    #[error("split: {0}")]
    Split(#[from] SplitError),
    #[error("set enumeration: {0}")]
    Enumeration(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("artifact {path}: {message}")]
    Artifact { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// Everything one set's execution decided, resolved from its chosen
/// operationalizations (bases first, so extensions override).
#[derive(Debug, Default, Clone, PartialEq)]
struct SetPlan {
    drops: Vec<String>,
    kanon_k: Option<u64>,
    minimize: Option<(f64, usize)>,
    family: Option<ModelFamily>,
    weighting: Option<WeightPolicy>,
    reject_epsilon: Option<f64>,
    reject_theta: Option<f64>,
}

/// Default tolerated recall drop while tuning the reject-option ceiling,
/// used when the operationalization does not set `epsilon`.
pub const DEFAULT_REJECT_EPSILON: f64 = 0.02;

fn resolve_plan(spec: &RunSpec, set: &OperationalizationSet) -> Result<SetPlan, String> {
    let mut plan = SetPlan::default();
    for req in &spec.requirements {
        let ix = set
            .index_for(&req.id)
            .ok_or_else(|| format!("set has no choice for requirement {:?}", req.id))?;
        let op = spec
            .op(&req.id, ix)
            .ok_or_else(|| format!("unknown operationalization {}({ix})", req.id))?;
        for link in spec.effective_chain(op) {
            match link.kind {
                OperationalizationKind::FeatureDrop => plan.drops.extend(link.drop_list()?),
                OperationalizationKind::RejectOption => {
                    plan.drops.extend(link.drop_list()?);
                    plan.reject_epsilon =
                        Some(link.epsilon()?.unwrap_or(DEFAULT_REJECT_EPSILON));
                    plan.reject_theta = link.theta()?;
                }
                OperationalizationKind::DataMinimization => {
                    plan.minimize = Some((link.stopping_threshold()?, link.batch_size()?));
                }
                OperationalizationKind::KAnonymity => plan.kanon_k = Some(link.k()?),
                OperationalizationKind::NoOp => {}
                OperationalizationKind::ModelFamily => plan.family = Some(link.family()?),
                OperationalizationKind::ClassWeighting => {
                    plan.weighting = Some(link.weight_policy()?);
                }
            }
        }
    }
    plan.drops.dedup();
    Ok(plan)
}

/// Per-set evaluation detail persisted as the `metrics` artifact; the
/// trade-off record is its summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub set_id: u32,
    pub signature: String,
    pub family: ModelFamily,
    pub confusion: Confusion,
    pub panel: PerfPanel,
    /// Disparity with the full per-stratum breakdown.
    pub cdd: CddResult,
    pub data_used_fraction: f64,
    pub k_anonymized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub achieved_k: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaChoice>,
}

/// Persisted model artifact: the trained model plus the provenance needed
/// to reproduce it (set, seed, surviving data fraction, weighting).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub set_id: u32,
    pub seed: u64,
    pub data_used_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_policy: Option<WeightPolicy>,
    pub model: TrainedModel,
}

/// One executed set: the summary record plus the artifacts worth keeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SetArtifacts {
    pub record: TradeoffRecord,
    pub model: Option<ModelDocument>,
    pub metrics: Option<MetricsDocument>,
    pub trace: Option<MinimizationTrace>,
    pub genmap: Option<GeneralizationMap>,
}

fn unprivileged_mask(data: &Dataset, spec: &RunSpec) -> Result<Vec<bool>, String> {
    let value = spec
        .unprivileged_value
        .as_deref()
        .ok_or("spec designates no unprivileged group value")?;
    let values = data.column_strings(&spec.protected_feature).map_err(|e| e.to_string())?;
    Ok(values.iter().map(|v| v == value).collect())
}

struct SetRun {
    metrics: RecordMetrics,
    doc: MetricsDocument,
    model: ModelDocument,
    trace: Option<MinimizationTrace>,
    genmap: Option<GeneralizationMap>,
    notes: Vec<String>,
}

fn run_set(
    spec: &RunSpec,
    set: &OperationalizationSet,
    splits: &DataSplit,
    seed: u64,
) -> Result<SetRun, String> {
    let plan = resolve_plan(spec, set)?;
    let family = plan
        .family
        .ok_or("no model-family operationalization in this set")?;
    let mut notes = Vec::new();

    let mut train = splits.train.clone();
    let mut valid = splits.validation.clone();
    let mut test = splits.test.clone();

    if !plan.drops.is_empty() {
        for d in [&mut train, &mut valid, &mut test] {
            drop_features(d, &plan.drops).map_err(|e| e.to_string())?;
        }
    }

    let mut genmap = None;
    let mut achieved_k = None;
    let mut trace = None;
    let mut fraction_used = 1.0;

    let anonymize = |train: &mut Dataset,
                     valid: &mut Dataset,
                     test: &mut Dataset,
                     notes: &mut Vec<String>|
     -> Result<Option<(GeneralizationMap, u64)>, String> {
        let Some(k) = plan.kanon_k else { return Ok(None) };
        let map = fit_generalization(train, k).map_err(|e| e.to_string())?;
        map.apply(train).map_err(|e| e.to_string())?;
        map.apply(valid).map_err(|e| e.to_string())?;
        map.apply(test).map_err(|e| e.to_string())?;
        let qi_names = map.quasi_identifier_names();
        let got = verify_k_anonymity(train, &qi_names);
        if got < k {
            return Err(format!(
                "k-anonymity verification failed: minimum class size {got} < k = {k}"
            ));
        }
        notes.push(format!(
            "k-anonymity: {} quasi-identifiers generalized into {} regions; verified \
             minimum class size {got} (k = {k})",
            qi_names.len(),
            map.n_regions()
        ));
        Ok(Some((map, got)))
    };

    let minimize_train =
        |train: &mut Dataset, valid: &Dataset, notes: &mut Vec<String>| -> Result<
            Option<MinimizationTrace>,
            String,
        > {
        let Some((threshold, batch_size)) = plan.minimize else { return Ok(None) };
        let probe = FamilyProbe {
            family,
            hyper: crate::models::probe_hyper(&spec.hyper),
            validation: valid,
            seed: derive_seed(seed, 2),
        };
        let config = MinimizeConfig {
            stopping_threshold: threshold,
            batch_size,
            window: 3,
            seed: derive_seed(seed, 1),
        };
        let (subset, tr) = minimize(train, &probe, &config).map_err(|e| e.to_string())?;
        notes.push(format!(
            "data minimization: used {} of {} pool rows ({}), stop reason {:?}",
            tr.rows_used,
            tr.pool_size,
            crate::metrics::data_usage_percent(tr.fraction_used),
            tr.stop_reason
        ));
        *train = subset;
        Ok(Some(tr))
    };

    // Canonical order anonymizes first so the stopping rule measures
    // performance on the data the model will actually see; the override
    // flag swaps the two stages for experimentation.
    if spec.minimize_before_anonymize {
        if let Some(tr) = minimize_train(&mut train, &valid, &mut notes)? {
            fraction_used = tr.fraction_used;
            trace = Some(tr);
        }
        if let Some((map, got)) = anonymize(&mut train, &mut valid, &mut test, &mut notes)? {
            genmap = Some(map);
            achieved_k = Some(got);
        }
    } else {
        if let Some((map, got)) = anonymize(&mut train, &mut valid, &mut test, &mut notes)? {
            genmap = Some(map);
            achieved_k = Some(got);
        }
        if let Some(tr) = minimize_train(&mut train, &valid, &mut notes)? {
            fraction_used = tr.fraction_used;
            trace = Some(tr);
        }
    }

    let train_labels = train.labels().map_err(|e| e.to_string())?;
    let weights = match &plan.weighting {
        Some(policy) => {
            let w = class_weights(&train_labels, policy).map_err(|e| e.to_string())?;
            let positive = w
                .iter()
                .zip(&train_labels)
                .find(|(_, &l)| l == 1)
                .map(|(&w, _)| w)
                .unwrap_or(1.0);
            notes.push(format!("class weighting: positive rows weighted {positive:.2}"));
            w
        }
        None => vec![1.0; train_labels.len()],
    };

    let model = train_family(
        family,
        &train,
        &train_labels,
        &weights,
        &spec.hyper,
        derive_seed(seed, 3),
    )
    .map_err(|e| e.to_string())?;

    let probs_test = model.predict_proba(&test).map_err(|e| e.to_string())?;
    let test_labels = test.labels().map_err(|e| e.to_string())?;
    let unpriv_test = unprivileged_mask(&test, spec)?;
    let strata_test =
        build_strata_keys(&test, &spec.strata_features).map_err(|e| e.to_string())?;

    let mut theta_choice = None;
    let preds_test: Vec<u8> = if let Some(epsilon) = plan.reject_epsilon {
        let probs_valid = model.predict_proba(&valid).map_err(|e| e.to_string())?;
        let valid_labels = valid.labels().map_err(|e| e.to_string())?;
        let unpriv_valid = unprivileged_mask(&valid, spec)?;
        let strata_valid =
            build_strata_keys(&valid, &spec.strata_features).map_err(|e| e.to_string())?;
        let theta = match plan.reject_theta {
            Some(t) => {
                notes.push(format!("reject-option: fixed θ = {t:.2}"));
                t
            }
            None => {
                let score = |preds: &[u8]| -> f64 {
                    cdd(preds, &unpriv_valid, &strata_valid)
                        .map(|r| r.cdd.abs())
                        .unwrap_or(f64::INFINITY)
                };
                let choice = tune_theta(&probs_valid, &unpriv_valid, &valid_labels, epsilon, &score)
                    .map_err(|e| e.to_string())?;
                notes.push(format!(
                    "reject-option: θ = {:.2} tuned on validation (|CDD| {:.3}, recall \
                     {:.3} vs base {:.3}, ε = {epsilon})",
                    choice.theta, choice.abs_discrimination, choice.recall, choice.base_recall
                ));
                let theta = choice.theta;
                theta_choice = Some(choice);
                theta
            }
        };
        apply_reject(&probs_test, &unpriv_test, theta)
    } else {
        probs_test.iter().map(|&p| u8::from(p >= 0.5)).collect()
    };

    let counts = confusion(&test_labels, &preds_test).map_err(|e| e.to_string())?;
    let panel = perf_panel(&test_labels, &preds_test).map_err(|e| e.to_string())?;
    let cdd_result = cdd(&preds_test, &unpriv_test, &strata_test).map_err(|e| e.to_string())?;
    let k_anonymized = achieved_k.is_some();
    let risk = risk_category(k_anonymized, spec.model_shared_externally, spec.risk_override);
    let explainability = explainability_category(family);

    let metrics = RecordMetrics {
        accuracy: panel.accuracy,
        precision: panel.precision.unwrap_or(0.0),
        recall: panel.recall.unwrap_or(0.0),
        f1: panel.f1.unwrap_or(0.0),
        data_used_fraction: fraction_used,
        k_anonymized,
        achieved_k,
        cdd: cdd_result.cdd,
        risk,
        explainability,
    };
    let doc = MetricsDocument {
        set_id: set.set_id,
        signature: set.signature(),
        family,
        confusion: counts,
        panel,
        cdd: cdd_result,
        data_used_fraction: fraction_used,
        k_anonymized,
        achieved_k,
        theta: theta_choice,
    };
    let model = ModelDocument {
        set_id: set.set_id,
        seed,
        data_used_fraction: fraction_used,
        weight_policy: plan.weighting,
        model,
    };
    Ok(SetRun { metrics, doc, model, trace, genmap, notes })
}

/// Executes one set. Failures become a failed record annotated with the
/// set id — never a panic or an aborted run.
pub fn execute_set(
    spec: &RunSpec,
    set: &OperationalizationSet,
    splits: &DataSplit,
) -> SetArtifacts {
    let seed = derive_seed(spec.seed, u64::from(set.set_id));
    match run_set(spec, set, splits, seed) {
        Ok(run) => {
            let mut record = TradeoffRecord::ok(set.set_id, set.signature(), run.metrics);
            record.notes = run.notes;
            SetArtifacts {
                record,
                model: Some(run.model),
                metrics: Some(run.doc),
                trace: run.trace,
                genmap: run.genmap,
            }
        }
        Err(error) => SetArtifacts {
            record: TradeoffRecord::failed(
                set.set_id,
                set.signature(),
                format!("set {}: {error}", set.set_id),
            ),
            model: None,
            metrics: None,
            trace: None,
            genmap: None,
        },
    }
}

/// Everything a run produced, in memory.
#[derive(Debug)]
pub struct RunOutcome {
    pub run_id: String,
    pub spec: RunSpec,
    pub dataset_digest: String,
    pub dataset_provenance: Vec<String>,
    pub sets: Vec<OperationalizationSet>,
    pub artifacts: Vec<SetArtifacts>,
    pub table: TradeoffTable,
    pub pareto: Vec<u32>,
    pub selection: Selection,
}

/// Content digest of a dataset: schema names and rendered cells, in order.
pub fn dataset_digest(data: &Dataset) -> String {
    let mut hasher = Sha256::new();
    for f in &data.features {
        hasher.update(f.name.as_bytes());
        hasher.update([0u8]);
    }
    hasher.update([1u8]);
    for row in &data.rows {
        for cell in row {
            hasher.update(cell.render().as_bytes());
            hasher.update([0u8]);
        }
        hasher.update([1u8]);
    }
    hex_digest(&hasher.finalize())
}

fn hex_digest(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn compute_run_id(spec: &RunSpec, dataset_digest: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_string(spec).expect("spec serializes").as_bytes());
    hasher.update([0u8]);
    hasher.update(dataset_digest.as_bytes());
    hex_digest(&hasher.finalize())[..12].to_string()
}

/// Runs every enumerated (and possibly pruned) set against one dataset.
/// `parallel` bounds the worker count; any value produces identical
/// results because each set's seed depends only on (spec seed, set id).
pub fn execute_run(
    spec: &RunSpec,
    dataset: &Dataset,
    parallel: usize,
) -> Result<RunOutcome, PipelineError> {
    let violations = validate_dataset(dataset, spec);
    if !violations.is_empty() {
        return Err(PipelineError::Dataset(violations.join("; ")));
    }
    let splits = split(dataset, &spec.split, spec.seed)?;
    let sets = enumerate_sets(spec).map_err(|e| PipelineError::Enumeration(e.to_string()))?;
    let sets = prune_sets(sets, spec.prune.as_ref());

    let artifacts: Vec<SetArtifacts> = if parallel > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .map_err(|e| PipelineError::Enumeration(format!("worker pool: {e}")))?;
        pool.install(|| sets.par_iter().map(|s| execute_set(spec, s, &splits)).collect())
    } else {
        sets.iter().map(|s| execute_set(spec, s, &splits)).collect()
    };

    let records: Vec<TradeoffRecord> = artifacts.iter().map(|a| a.record.clone()).collect();
    let table = build_table(&records)
        .with_cdd_label(format!("CDD ({})", spec.protected_feature));
    let pareto = pareto_front(&records, &policy_directions(&spec.selection));
    let selection = select(&records, &spec.selection);
    let digest = dataset_digest(dataset);

    Ok(RunOutcome {
        run_id: compute_run_id(spec, &digest),
        spec: spec.clone(),
        dataset_digest: digest,
        dataset_provenance: dataset.provenance.clone(),
        sets,
        artifacts,
        table,
        pareto,
        selection,
    })
}

/// Selection state persisted beside the table so `report` can re-render
/// byte-identically even after the policy was swapped via `select`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDocument {
    pub policy: SelectionPolicy,
    pub pareto: Vec<u32>,
    pub selection: Selection,
}

/// Run-level index: identity and provenance, no timestamps (artifacts must
/// be byte-stable across reruns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunIndex {
    pub run_id: String,
    pub seed: u64,
    pub dataset_digest: String,
    #[serde(default)]
    pub dataset_provenance: Vec<String>,
    pub set_count: usize,
    #[serde(default)]
    pub failed_sets: Vec<u32>,
}

fn write_file(path: &Path, content: &str) -> Result<(), PipelineError> {
    fs::write(path, content).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    write_file(path, &text)
}

/// Writes the artifact directory for a run and returns its path:
/// `<out_root>/runs/<run-id>/` containing the spec snapshot, per-set
/// artifacts, the trade-off table renders, the selection document, and the
/// report.
pub fn persist_run(outcome: &RunOutcome, out_root: &Path) -> Result<PathBuf, PipelineError> {
    let run_dir = out_root.join("runs").join(&outcome.run_id);
    fs::create_dir_all(&run_dir).map_err(io_err(&run_dir))?;

    let mut spec_snapshot =
        serde_json::to_string_pretty(&outcome.spec).expect("spec serializes");
    spec_snapshot.push('\n');
    write_file(&run_dir.join("spec.snapshot"), &spec_snapshot)?;

    write_json(
        &run_dir.join("run.json"),
        &RunIndex {
            run_id: outcome.run_id.clone(),
            seed: outcome.spec.seed,
            dataset_digest: outcome.dataset_digest.clone(),
            dataset_provenance: outcome.dataset_provenance.clone(),
            set_count: outcome.sets.len(),
            failed_sets: outcome
                .artifacts
                .iter()
                .filter(|a| a.record.metrics().is_none())
                .map(|a| a.record.set_id)
                .collect(),
        },
    )?;

    for artifact in &outcome.artifacts {
        let set_dir = run_dir.join("sets").join(artifact.record.set_id.to_string());
        fs::create_dir_all(&set_dir).map_err(io_err(&set_dir))?;
        if let Some(model) = &artifact.model {
            write_json(&set_dir.join("model"), model)?;
        }
        if let Some(metrics) = &artifact.metrics {
            write_json(&set_dir.join("metrics"), metrics)?;
        }
        if let Some(trace) = &artifact.trace {
            write_json(&set_dir.join("trace"), trace)?;
        }
        if let Some(genmap) = &artifact.genmap {
            write_json(&set_dir.join("genmap"), genmap)?;
        }
    }

    write_file(&run_dir.join("tradeoff.csv"), &outcome.table.to_csv())?;
    write_file(&run_dir.join("tradeoff.md"), &outcome.table.to_markdown())?;
    write_file(&run_dir.join("tradeoff.json"), &outcome.table.to_json())?;
    write_json(
        &run_dir.join("selection.json"),
        &SelectionDocument {
            policy: outcome.spec.selection.clone(),
            pareto: outcome.pareto.clone(),
            selection: outcome.selection.clone(),
        },
    )?;
    let report = render_report(&ReportContext {
        spec: &outcome.spec,
        sets: &outcome.sets,
        table: &outcome.table,
        selection: &outcome.selection,
        pareto: &outcome.pareto,
        run_id: &outcome.run_id,
    });
    write_file(&run_dir.join("report.md"), &report)?;
    Ok(run_dir)
}

/// A run directory reloaded from disk: enough state to re-select and
/// re-render without the dataset or the models.
#[derive(Debug, Clone)]
pub struct StoredRun {
    pub dir: PathBuf,
    pub run_id: String,
    pub spec: RunSpec,
    pub sets: Vec<OperationalizationSet>,
    pub table: TradeoffTable,
    pub selection_doc: SelectionDocument,
}

fn read_file(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    serde_json::from_str(&read_file(path)?).map_err(|e| PipelineError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Loads a persisted run directory. The operationalization sets are
/// re-enumerated from the spec snapshot, which reproduces them exactly.
pub fn load_run(dir: &Path) -> Result<StoredRun, PipelineError> {
    let spec = crate::domain::validate_spec(&read_file(&dir.join("spec.snapshot"))?)?;
    let sets = enumerate_sets(&spec).map_err(|e| PipelineError::Enumeration(e.to_string()))?;
    let sets = prune_sets(sets, spec.prune.as_ref());
    let table: TradeoffTable = read_json(&dir.join("tradeoff.json"))?;
    let selection_doc: SelectionDocument = read_json(&dir.join("selection.json"))?;
    let index: RunIndex = read_json(&dir.join("run.json"))?;
    Ok(StoredRun {
        dir: dir.to_path_buf(),
        run_id: index.run_id,
        spec,
        sets,
        table,
        selection_doc,
    })
}

impl StoredRun {
    /// Recomputes the selection under `policy`, rewrites `selection.json`
    /// and `report.md`, and returns the new selection.
    pub fn reselect(&mut self, policy: &SelectionPolicy) -> Result<Selection, PipelineError> {
        policy.validate()?;
        let pareto = pareto_front(&self.table.records, &policy_directions(policy));
        let selection = select(&self.table.records, policy);
        self.selection_doc = SelectionDocument {
            policy: policy.clone(),
            pareto,
            selection: selection.clone(),
        };
        write_json(&self.dir.join("selection.json"), &self.selection_doc)?;
        self.rewrite_report()?;
        Ok(selection)
    }

    /// Re-renders `report.md` from the stored state. Deterministic: the
    /// bytes equal whatever the last `run`/`select` wrote.
    pub fn rewrite_report(&self) -> Result<String, PipelineError> {
        let report = render_report(&ReportContext {
            spec: &self.spec,
            sets: &self.sets,
            table: &self.table,
            selection: &self.selection_doc.selection,
            pareto: &self.selection_doc.pareto,
            run_id: &self.run_id,
        });
        write_file(&self.dir.join("report.md"), &report)?;
        Ok(report)
    }
}
