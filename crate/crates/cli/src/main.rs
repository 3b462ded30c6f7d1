//! `tradeoff-forge`: generate data, enumerate operationalization sets, run
//! the evaluation pipeline, and select a model under a declarative policy.
//!
//! Exit codes: 0 success (including runs with failed sets and selections
//! with an empty feasible set — both are reportable outcomes, not process
//! errors); 1 runtime validation or I/O failure; 2 invalid arguments,
//! malformed specification, or malformed policy. Diagnostics go to stderr;
//! stdout carries summaries only.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tradeoff_core::domain::{validate_spec, Dataset, SelectionPolicy};
use tradeoff_core::pipeline::{execute_run, load_run, persist_run, RunOutcome};
use tradeoff_core::setform::{enumerate_sets, plan_matrix, prune_sets};
use tradeoff_core::synthgen::{
    generate, read_sidecar, schema, write_sidecar, DataSidecar, GenConfig,
};

/// Environment variable that overrides `--seed` (and the spec's seed).
const SEED_ENV: &str = "TRADEOFF_FORGE_SEED";

#[derive(Parser)]
#[command(
    name = "tradeoff-forge",
    version,
    about = "Trains one model per operationalization set and maps the trade-offs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic transaction dataset (CSV plus provenance sidecar).
    GenData {
        /// Output CSV path; the sidecar lands at <out>.provenance.json.
        #[arg(long)]
        out: PathBuf,
        /// Number of rows (minimum 100).
        #[arg(long, default_value_t = 10_000)]
        rows: usize,
        /// Target share of positive (alert) labels, strictly between 0 and 1.
        #[arg(long, default_value_t = 0.10)]
        positive_rate: f64,
        /// Planted-bias strength in [0, 1]; 0 leaves the protected feature
        /// independent of everything else.
        #[arg(long, default_value_t = 0.0)]
        disparity: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Validate a spec and print its operationalization-set matrix.
    Plan {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = PlanFormat::Md)]
        format: PlanFormat,
    },
    /// Execute every set against a dataset and write the artifact directory.
    Run {
        #[arg(long)]
        spec: PathBuf,
        /// Dataset CSV; its .provenance.json sidecar supplies the schema
        /// when present.
        #[arg(long)]
        data: PathBuf,
        /// Artifact root; the run lands under <out>/runs/<run-id>/.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the spec's seed (TRADEOFF_FORGE_SEED overrides both).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker count for set execution; results are identical for any
        /// value.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Re-apply a selection policy to a persisted run and rewrite its
    /// selection and report.
    Select {
        /// Run directory (the runs/<run-id> path printed by `run`).
        #[arg(long)]
        run: PathBuf,
        /// JSON file holding the selection policy.
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Re-render report.md from persisted artifacts (byte-identical).
    Report {
        /// Run directory (the runs/<run-id> path printed by `run`).
        #[arg(long)]
        run: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PlanFormat {
    Csv,
    Md,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

/// A command failure: exit code plus the stderr diagnostic.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    /// Runtime validation or I/O failure.
    fn runtime(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    /// Invalid arguments or malformed input documents.
    fn invalid(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData { out, rows, positive_rate, disparity, seed } => {
            cmd_gen_data(out, rows, positive_rate, disparity, seed)
        }
        Command::Plan { spec, format } => cmd_plan(spec, format),
        Command::Run { spec, data, out, seed, parallel, format } => {
            cmd_run(spec, data, out, seed, parallel, format)
        }
        Command::Select { run, policy, format } => cmd_select(run, policy, format),
        Command::Report { run } => cmd_report(run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_gen_data(
    out: PathBuf,
    rows: usize,
    positive_rate: f64,
    disparity: f64,
    seed: u64,
) -> Result<(), Failure> {
    let config = GenConfig {
        n_rows: rows,
        positive_rate,
        disparity_strength: disparity,
        seed,
        ..GenConfig::default()
    };
    config.validate().map_err(|e| Failure::invalid(e.to_string()))?;
    let data = generate(&config).map_err(|e| Failure::invalid(e.to_string()))?;
    data.write_csv(&out).map_err(|e| Failure::runtime(e.to_string()))?;
    let labels = data.labels().map_err(|e| Failure::runtime(e.to_string()))?;
    let label_rate = labels.iter().map(|&l| f64::from(l)).sum::<f64>() / labels.len() as f64;
    let sidecar = DataSidecar {
        config,
        schema: data.features.clone(),
        n_rows: data.n_rows(),
        label_rate,
    };
    write_sidecar(&out, &sidecar).map_err(|e| Failure::runtime(e.to_string()))?;
    println!(
        "wrote {} rows to {} ({:.1}% positive), sidecar {}",
        data.n_rows(),
        out.display(),
        label_rate * 100.0,
        tradeoff_core::synthgen::sidecar_path(&out).display()
    );
    Ok(())
}

fn cmd_plan(spec_path: PathBuf, format: PlanFormat) -> Result<(), Failure> {
    let raw = fs::read_to_string(&spec_path)
        .map_err(|e| Failure::runtime(format!("{}: {e}", spec_path.display())))?;
    let spec = validate_spec(&raw).map_err(|e| Failure::invalid(e.to_string()))?;
    let sets = enumerate_sets(&spec).map_err(|e| Failure::invalid(e.to_string()))?;
    let sets = prune_sets(sets, spec.prune.as_ref());
    let matrix = plan_matrix(&spec, &sets);
    let rendered = match format {
        PlanFormat::Csv => matrix.to_csv(),
        PlanFormat::Md => matrix.to_markdown(),
        PlanFormat::Json => matrix.to_json(),
    };
    print!("{rendered}");
    Ok(())
}

/// Seed precedence: TRADEOFF_FORGE_SEED beats --seed beats the spec.
fn effective_seed(flag: Option<u64>) -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Failure::invalid(format!("{SEED_ENV} must be an unsigned integer, got {raw:?}"))),
        Err(_) => Ok(flag),
    }
}

fn run_summary(outcome: &RunOutcome, dir: &std::path::Path) -> String {
    let failed: Vec<u32> = outcome
        .artifacts
        .iter()
        .filter(|a| a.record.metrics().is_none())
        .map(|a| a.record.set_id)
        .collect();
    let mut s = String::new();
    let _ = writeln!(s, "run {} — {} sets evaluated", outcome.run_id, outcome.sets.len());
    if !failed.is_empty() {
        let list: Vec<String> = failed.iter().map(u32::to_string).collect();
        let _ = writeln!(s, "failed sets: {}", list.join(", "));
    }
    match outcome.selection.chosen {
        Some(id) => {
            let _ = writeln!(s, "chosen: Set {id}");
        }
        None => {
            let _ = writeln!(s, "chosen: none (no set satisfies all hard thresholds)");
        }
    }
    let _ = writeln!(s, "artifacts: {}", dir.display());
    s
}

fn cmd_run(
    spec_path: PathBuf,
    data_path: PathBuf,
    out: PathBuf,
    seed: Option<u64>,
    parallel: usize,
    format: OutputFormat,
) -> Result<(), Failure> {
    if parallel == 0 {
        return Err(Failure::invalid("--parallel must be at least 1"));
    }
    let raw = fs::read_to_string(&spec_path)
        .map_err(|e| Failure::runtime(format!("{}: {e}", spec_path.display())))?;
    let mut spec = validate_spec(&raw).map_err(|e| Failure::runtime(e.to_string()))?;
    if let Some(s) = effective_seed(seed)? {
        spec.seed = s;
    }
    // The sidecar written by gen-data carries the authoritative schema; a
    // bare CSV falls back to the built-in transaction schema.
    let features = match read_sidecar(&data_path) {
        Ok(sidecar) => sidecar.schema,
        Err(_) => schema(),
    };
    let dataset = Dataset::read_csv(&data_path, features)
        .map_err(|e| Failure::runtime(e.to_string()))?;
    let outcome =
        execute_run(&spec, &dataset, parallel).map_err(|e| Failure::runtime(e.to_string()))?;
    let dir = persist_run(&outcome, &out).map_err(|e| Failure::runtime(e.to_string()))?;
    match format {
        OutputFormat::Text => print!("{}", run_summary(&outcome, &dir)),
        OutputFormat::Json => {
            let failed: Vec<u32> = outcome
                .artifacts
                .iter()
                .filter(|a| a.record.metrics().is_none())
                .map(|a| a.record.set_id)
                .collect();
            let summary = serde_json::json!({
                "run_id": outcome.run_id,
                "dir": dir.display().to_string(),
                "sets": outcome.sets.len(),
                "failed_sets": failed,
                "chosen": outcome.selection.chosen,
            });
            println!("{summary}");
        }
    }
    Ok(())
}

fn cmd_select(
    run_dir: PathBuf,
    policy_path: PathBuf,
    format: OutputFormat,
) -> Result<(), Failure> {
    let raw = fs::read_to_string(&policy_path)
        .map_err(|e| Failure::runtime(format!("{}: {e}", policy_path.display())))?;
    let policy: SelectionPolicy =
        serde_json::from_str(&raw).map_err(|e| Failure::invalid(format!("policy: {e}")))?;
    policy.validate().map_err(|e| Failure::invalid(format!("policy: {e}")))?;
    let mut stored = load_run(&run_dir).map_err(|e| Failure::runtime(e.to_string()))?;
    let selection = stored.reselect(&policy).map_err(|e| Failure::runtime(e.to_string()))?;
    match format {
        OutputFormat::Text => {
            match selection.chosen {
                Some(id) => println!("chosen: Set {id}"),
                None => println!("chosen: none (no set satisfies all hard thresholds)"),
            }
            for line in &selection.rationale {
                println!("  - {line}");
            }
            println!("report updated: {}", run_dir.join("report.md").display());
        }
        OutputFormat::Json => {
            let summary = serde_json::json!({
                "chosen": selection.chosen,
                "feasible": selection.feasible,
                "rationale": selection.rationale,
                "report": run_dir.join("report.md").display().to_string(),
            });
            println!("{summary}");
        }
    }
    Ok(())
}

fn cmd_report(run_dir: PathBuf) -> Result<(), Failure> {
    let stored = load_run(&run_dir).map_err(|e| Failure::runtime(e.to_string()))?;
    stored.rewrite_report().map_err(|e| Failure::runtime(e.to_string()))?;
    println!("report rendered: {}", run_dir.join("report.md").display());
    Ok(())
}
