//! Synthetic retail-transaction data with a controllable link between the
//! protected attribute and outcomes.
//!
//! Rows are drawn from per-row RNG streams keyed by (seed, row index), so
//! generation is order-independent and the feature prefix of a larger
//! dataset matches a smaller one with the same seed. Labels come from a
//! logistic ground-truth model over a configurable set of signal features;
//! `disparity_strength` both shifts the protected group's label odds and
//! tilts two of its feature distributions (amount, profession), so part of
//! the planted disparity survives removal of the protected column and is
//! visible to downstream fairness metrics through proxies.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    Cell, DataError, Dataset, FeatureDef, FeatureKind, FeatureRole, SplitFractions,
};
use crate::seeding::{derive_seed, stream_rng};

pub const COUNTRIES: [&str; 30] = [
    "AT", "AU", "BE", "BR", "CA", "CH", "CN", "CZ", "DE", "DK", "ES", "FI", "FR", "GB", "GR",
    "HU", "IE", "IN", "IT", "JP", "LU", "MX", "NL", "NO", "PL", "PT", "SE", "SG", "US", "ZA",
];

pub const INDUSTRIES: [&str; 12] = [
    "Agriculture", "Construction", "Consulting", "Education", "Energy", "Finance", "Healthcare",
    "Hospitality", "Manufacturing", "Real Estate", "Retail", "Technology",
];

pub const PROFESSIONS: [&str; 10] = [
    "Accountant", "Consultant", "Engineer", "Lawyer", "Merchant", "Nurse", "Professor",
    "Software Developer", "Teacher", "Trader",
];

pub const CURRENCIES: [&str; 8] = ["EUR", "USD", "GBP", "CHF", "JPY", "SEK", "NOK", "PLN"];

pub const GENDERS: [&str; 2] = ["Female", "Male"];

/// The gender value that receives the planted disparity.
pub const DISPARITY_GROUP: &str = GENDERS[0];

pub const LABEL_COLUMN: &str = "Likely Money Laundering";

const DIRECTIONS: [&str; 2] = ["inbound", "outbound"];
const TX_TYPES: [&str; 2] = ["securities", "cash"];
const PEP_VALUES: [&str; 2] = ["No", "Yes"];

/// Reference parameters of the log-normal amount and asset distributions;
/// numeric signal effects are expressed on these standardized log scales.
const LN_AMOUNT_MEAN: f64 = 8.0;
const LN_AMOUNT_SD: f64 = 1.0;
const LN_ASSETS_MEAN: f64 = 12.0;
const LN_ASSETS_SD: f64 = 1.2;

/// How strongly `disparity_strength` tilts the protected group's
/// log-amount mean (in SDs) and profession distribution (in log-odds per
/// ramp unit). These proxies are what keeps planted disparity measurable
/// after the protected column itself is dropped.
const AMOUNT_TILT_PER_STRENGTH: f64 = 0.6;
const PROFESSION_TILT_PER_STRENGTH: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalFeature {
    pub feature: String,
    pub effect: f64,
}

fn default_signals() -> Vec<SignalFeature> {
    [
        ("Amount", 1.0),
        ("Profession", 0.8),
        ("PEP Status", 0.7),
        ("Receiver Country", 0.6),
        ("Transaction Type", 0.5),
        ("Source of Wealth Industry", 0.5),
    ]
    .into_iter()
    .map(|(feature, effect)| SignalFeature { feature: feature.to_string(), effect })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_rows: usize,
    /// Target share of label-1 rows; the ground-truth intercept is
    /// calibrated so the expected rate matches exactly.
    pub positive_rate: f64,
    /// In [0, 1]: log-odds shift on the protected group plus proportional
    /// proxy tilts. 0 means gender is independent of everything else.
    pub disparity_strength: f64,
    #[serde(default = "default_signals")]
    pub signal_features: Vec<SignalFeature>,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_rows: 10_000,
            positive_rate: 0.10,
            disparity_strength: 0.0,
            signal_features: default_signals(),
            seed: 42,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SplitError {
    #[error("split fractions must be positive and sum to 1.0")]
    BadFractions,
    #[error("{split} split would hold {count} positive rows; at least 2 are required")]
    TooFewPositives { split: &'static str, count: usize },
    #[error("dataset has no label column: {0}")]
    NoLabel(String),
}

/// Column schema of the generated datasets: 16 features plus the binary
/// label. Account identifiers are excluded from model input; the seven
/// re-identifying account-holder attributes other than Gender, plus Amount,
/// carry the quasi-identifier role.
pub fn schema() -> Vec<FeatureDef> {
    use FeatureKind::*;
    use FeatureRole::*;
    vec![
        FeatureDef::new("Gender", Categorical, Protected).with_domain(&GENDERS),
        FeatureDef::new("Legal Domicile", Categorical, QuasiIdentifier).with_domain(&COUNTRIES),
        FeatureDef::new("Tax Residency", Categorical, QuasiIdentifier).with_domain(&COUNTRIES),
        FeatureDef::new("Source of Wealth Industry", Categorical, QuasiIdentifier)
            .with_domain(&INDUSTRIES),
        FeatureDef::new("Total Estimated Assets", Numeric, QuasiIdentifier),
        FeatureDef::new("Profession", Categorical, QuasiIdentifier).with_domain(&PROFESSIONS),
        FeatureDef::new("PEP Status", Categorical, QuasiIdentifier).with_domain(&PEP_VALUES),
        FeatureDef::new("Direction", Categorical, Feature).with_domain(&DIRECTIONS),
        FeatureDef::new("Sender Account Number", AccountId, Excluded),
        FeatureDef::new("Sender Country", Categorical, Feature).with_domain(&COUNTRIES),
        FeatureDef::new("Receiver Account Number", AccountId, Excluded),
        FeatureDef::new("Receiver Country", Categorical, Feature).with_domain(&COUNTRIES),
        FeatureDef::new("Transaction Date", Date, Feature),
        FeatureDef::new("Transaction Type", Categorical, Feature).with_domain(&TX_TYPES),
        FeatureDef::new("Amount", Numeric, QuasiIdentifier),
        FeatureDef::new("Transaction Currency", Categorical, Feature).with_domain(&CURRENCIES),
        FeatureDef::new(LABEL_COLUMN, Categorical, Label).with_domain(&["0", "1"]),
    ]
}

/// Symmetric ramp over a domain's positions: first value scores −1, last +1.
/// Used both to tilt distributions and as the ground-truth risk score of a
/// categorical value. Entirely synthetic — the ordering carries no
/// real-world meaning.
fn ramp(len: usize, index: usize) -> f64 {
    if len <= 1 {
        0.0
    } else {
        2.0 * index as f64 / (len - 1) as f64 - 1.0
    }
}

/// Standard normal via Box–Muller; always consumes exactly two draws.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Inverse-CDF draw over unnormalized weights; exactly one uniform draw.
fn pick_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        target -= w;
        if target < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

fn cents(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn iban_like(rng: &mut ChaCha8Rng, country: &str) -> String {
    let check: u32 = rng.gen_range(10..98);
    let number: u64 = rng.gen_range(0..10_000_000_000_000_000);
    format!("{country}{check:02}{number:016}")
}

struct RowDraw {
    cells: Vec<Cell>,
    /// Ground-truth logit without the calibrated intercept.
    logit: f64,
    /// Uniform used to realize the label; drawn from a dedicated stream so
    /// it is identical across disparity settings.
    label_u: f64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.n_rows < 100 {
            return Err(GenError::InvalidConfig(format!(
                "n_rows must be ≥ 100, got {}",
                self.n_rows
            )));
        }
        if !(self.positive_rate > 0.0 && self.positive_rate < 1.0) {
            return Err(GenError::InvalidConfig(format!(
                "positive_rate must lie strictly between 0 and 1, got {}",
                self.positive_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.disparity_strength) {
            return Err(GenError::InvalidConfig(format!(
                "disparity_strength must lie in [0, 1], got {}",
                self.disparity_strength
            )));
        }
        let names: Vec<String> = schema().iter().map(|f| f.name.clone()).collect();
        for s in &self.signal_features {
            if !names.contains(&s.feature) {
                return Err(GenError::InvalidConfig(format!(
                    "unknown signal feature {:?}",
                    s.feature
                )));
            }
            if s.feature == LABEL_COLUMN {
                return Err(GenError::InvalidConfig(
                    "the label cannot be a signal feature".to_string(),
                ));
            }
            if !s.effect.is_finite() {
                return Err(GenError::InvalidConfig(format!(
                    "effect for {:?} must be finite",
                    s.feature
                )));
            }
        }
        Ok(())
    }
}

fn domain_ramp_score(domain: &[&str], value: &str) -> f64 {
    let idx = domain.iter().position(|v| *v == value).unwrap_or(0);
    ramp(domain.len(), idx)
}

fn draw_row(config: &GenConfig, row: usize) -> RowDraw {
    let base = derive_seed(config.seed, row as u64);
    let mut rng = stream_rng(base, 0);
    let d = config.disparity_strength;

    let gender = GENDERS[usize::from(rng.gen::<f64>() >= 0.5)];
    let protected = gender == DISPARITY_GROUP;

    let domicile_ix = rng.gen_range(0..COUNTRIES.len());
    let domicile = COUNTRIES[domicile_ix];
    let residency_pick = rng.gen_range(0..COUNTRIES.len());
    let residency = if rng.gen::<f64>() < 0.85 { domicile } else { COUNTRIES[residency_pick] };

    let industry = INDUSTRIES[rng.gen_range(0..INDUSTRIES.len())];

    let assets = cents((LN_ASSETS_MEAN + LN_ASSETS_SD * normal(&mut rng)).exp());

    let profession_tilt = if protected { PROFESSION_TILT_PER_STRENGTH * d } else { 0.0 };
    let prof_weights: Vec<f64> = (0..PROFESSIONS.len())
        .map(|i| (profession_tilt * ramp(PROFESSIONS.len(), i)).exp())
        .collect();
    let profession = PROFESSIONS[pick_weighted(&mut rng, &prof_weights)];

    let pep = PEP_VALUES[usize::from(rng.gen::<f64>() < 0.05)];
    let direction = DIRECTIONS[usize::from(rng.gen::<f64>() >= 0.5)];

    let sender_account = iban_like(&mut rng, domicile);
    let sender_country = COUNTRIES[rng.gen_range(0..COUNTRIES.len())];
    let receiver_country = COUNTRIES[rng.gen_range(0..COUNTRIES.len())];
    let receiver_account = iban_like(&mut rng, receiver_country);

    let day_offset = rng.gen_range(0u64..730);
    let date = chrono::NaiveDate::from_ymd_opt(2023, 1, 1)
        .expect("valid anchor date")
        .checked_add_days(chrono::Days::new(day_offset))
        .expect("offset stays in range")
        .to_string();

    let tx_type = TX_TYPES[usize::from(rng.gen::<f64>() < 0.35)];

    let amount_tilt = if protected { AMOUNT_TILT_PER_STRENGTH * d } else { 0.0 };
    let ln_amount = LN_AMOUNT_MEAN + amount_tilt + LN_AMOUNT_SD * normal(&mut rng);
    let amount = cents(ln_amount.exp());

    let currency =
        if rng.gen::<f64>() < 0.7 { "EUR" } else { CURRENCIES[rng.gen_range(1..CURRENCIES.len())] };

    let mut logit = if protected { d } else { 0.0 };
    for s in &config.signal_features {
        let contribution = match s.feature.as_str() {
            "Amount" => (amount.max(1e-9).ln() - LN_AMOUNT_MEAN) / LN_AMOUNT_SD,
            "Total Estimated Assets" => (assets.max(1e-9).ln() - LN_ASSETS_MEAN) / LN_ASSETS_SD,
            "Gender" => domain_ramp_score(&GENDERS, gender),
            "Legal Domicile" => domain_ramp_score(&COUNTRIES, domicile),
            "Tax Residency" => domain_ramp_score(&COUNTRIES, residency),
            "Source of Wealth Industry" => domain_ramp_score(&INDUSTRIES, industry),
            "Profession" => domain_ramp_score(&PROFESSIONS, profession),
            "PEP Status" => domain_ramp_score(&PEP_VALUES, pep),
            "Direction" => domain_ramp_score(&DIRECTIONS, direction),
            "Sender Country" => domain_ramp_score(&COUNTRIES, sender_country),
            "Receiver Country" => domain_ramp_score(&COUNTRIES, receiver_country),
            "Transaction Type" => domain_ramp_score(&TX_TYPES, tx_type),
            "Transaction Currency" => domain_ramp_score(&CURRENCIES, currency),
            "Transaction Date" => 0.0,
            _ => 0.0,
        };
        logit += s.effect * contribution;
    }

    let label_u = stream_rng(base, 1).gen::<f64>();

    let cells = vec![
        Cell::Text(gender.to_string()),
        Cell::Text(domicile.to_string()),
        Cell::Text(residency.to_string()),
        Cell::Text(industry.to_string()),
        Cell::Num(assets),
        Cell::Text(profession.to_string()),
        Cell::Text(pep.to_string()),
        Cell::Text(direction.to_string()),
        Cell::Text(sender_account),
        Cell::Text(sender_country.to_string()),
        Cell::Text(receiver_account),
        Cell::Text(receiver_country.to_string()),
        Cell::Text(date),
        Cell::Text(tx_type.to_string()),
        Cell::Num(amount),
        Cell::Text(currency.to_string()),
        Cell::Text(String::new()), // label, filled in after calibration
    ];
    RowDraw { cells, logit, label_u }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Intercept b such that mean(sigmoid(b + logit_i)) equals the target rate.
fn calibrate_intercept(logits: &[f64], target: f64) -> f64 {
    let mut lo = -40.0;
    let mut hi = 40.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let mean: f64 = logits.iter().map(|z| sigmoid(mid + z)).sum::<f64>() / logits.len() as f64;
        if mean < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Generates a dataset. Identical configs produce identical datasets,
/// byte for byte once written as CSV.
pub fn generate(config: &GenConfig) -> Result<Dataset, GenError> {
    config.validate()?;
    let mut draws: Vec<RowDraw> = (0..config.n_rows).map(|r| draw_row(config, r)).collect();
    let logits: Vec<f64> = draws.iter().map(|d| d.logit).collect();
    let b = calibrate_intercept(&logits, config.positive_rate);

    let label_ix = schema().len() - 1;
    let mut rows = Vec::with_capacity(config.n_rows);
    for draw in draws.iter_mut() {
        let p = sigmoid(b + draw.logit);
        let label = if draw.label_u < p { "1" } else { "0" };
        draw.cells[label_ix] = Cell::Text(label.to_string());
        rows.push(std::mem::take(&mut draw.cells));
    }

    let mut dataset = Dataset { features: schema(), rows, provenance: Vec::new() };
    dataset.push_provenance(format!(
        "generated: rows={} positive_rate={} disparity_strength={} seed={}",
        config.n_rows, config.positive_rate, config.disparity_strength, config.seed
    ));
    Ok(dataset)
}

/// Train/validation/test datasets from one stratified split.
#[derive(Debug, Clone)]
pub struct DataSplit {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

/// Label-stratified split with exact largest-remainder apportionment: split
/// sizes are reproducible and per-split label rates stay within one
/// percentage point of the full dataset's rate for any non-degenerate size.
pub fn split(dataset: &Dataset, fractions: &SplitFractions, seed: u64) -> Result<DataSplit, SplitError> {
    let parts = [fractions.train, fractions.validation, fractions.test];
    if parts.iter().any(|f| !f.is_finite() || *f <= 0.0)
        || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(SplitError::BadFractions);
    }
    let labels = dataset.labels().map_err(|e| SplitError::NoLabel(e.to_string()))?;

    let mut assignments: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for class in [0u8, 1u8] {
        let mut members: Vec<usize> =
            (0..labels.len()).filter(|&i| labels[i] == class).collect();
        // Seeded shuffle, then exact apportionment over the three splits.
        let mut rng = stream_rng(seed, 100 + class as u64);
        for i in (1..members.len()).rev() {
            let j = rng.gen_range(0..=i);
            members.swap(i, j);
        }
        let n = members.len();
        let mut counts = [0usize; 3];
        let mut remainders: Vec<(usize, f64)> = Vec::new();
        for (s, f) in parts.iter().enumerate() {
            let exact = f * n as f64;
            counts[s] = exact.floor() as usize;
            remainders.push((s, exact - exact.floor()));
        }
        let mut leftover = n - counts.iter().sum::<usize>();
        remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for (s, _) in remainders {
            if leftover == 0 {
                break;
            }
            counts[s] += 1;
            leftover -= 1;
        }
        let mut cursor = 0;
        for (s, &c) in counts.iter().enumerate() {
            assignments[s].extend(&members[cursor..cursor + c]);
            cursor += c;
        }
    }

    let names = ["train", "validation", "test"];
    for (s, name) in names.iter().enumerate() {
        let positives = assignments[s].iter().filter(|&&i| labels[i] == 1).count();
        if positives < 2 {
            return Err(SplitError::TooFewPositives { split: name, count: positives });
        }
    }

    let mut out = assignments.map(|mut idx| {
        idx.sort_unstable();
        dataset.select_rows(&idx)
    });
    for (part, name) in out.iter_mut().zip(names) {
        part.push_provenance(format!("split: {name} seed={seed}"));
    }
    let [train, validation, test] = out;
    Ok(DataSplit { train, validation, test })
}

/// Provenance sidecar written next to generated CSV files; lets later
/// commands recover the schema and generation settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataSidecar {
    pub config: GenConfig,
    pub schema: Vec<FeatureDef>,
    pub n_rows: usize,
    pub label_rate: f64,
}

pub fn sidecar_path(data_path: &Path) -> PathBuf {
    let mut s = data_path.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}

pub fn write_sidecar(data_path: &Path, sidecar: &DataSidecar) -> Result<(), DataError> {
    let path = sidecar_path(data_path);
    let body = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    std::fs::write(&path, body + "\n")
        .map_err(|source| DataError::Io { path: path.display().to_string(), source })
}

pub fn read_sidecar(data_path: &Path) -> Result<DataSidecar, DataError> {
    let path = sidecar_path(data_path);
    let body = std::fs::read_to_string(&path)
        .map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
    serde_json::from_str(&body).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: usize, disparity: f64, seed: u64) -> GenConfig {
        GenConfig { n_rows: n, disparity_strength: disparity, seed, ..GenConfig::default() }
    }

    fn label_rate(d: &Dataset) -> f64 {
        let l = d.labels().unwrap();
        l.iter().map(|&v| v as f64).sum::<f64>() / l.len() as f64
    }

    #[test]
    fn rejects_undersized_config() {
        let err = generate(&config(10, 0.0, 1)).unwrap_err();
        assert!(err.to_string().contains("n_rows must be ≥ 100"));
    }

    #[test]
    fn positive_rate_lands_in_band() {
        let d = generate(&config(10_000, 0.0, 42)).unwrap();
        let rate = label_rate(&d);
        assert!((0.08..=0.12).contains(&rate), "rate {rate}");
    }

    #[test]
    fn generation_is_deterministic_and_csv_stable() {
        let a = generate(&config(500, 0.25, 9)).unwrap();
        let b = generate(&config(500, 0.25, 9)).unwrap();
        assert_eq!(a, b);
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        a.write_csv(&p1).unwrap();
        b.write_csv(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate(&config(200, 0.0, 1)).unwrap();
        let b = generate(&config(200, 0.0, 2)).unwrap();
        assert_ne!(a.rows, b.rows);
    }

    #[test]
    fn feature_prefix_is_stable_under_growth() {
        let small = generate(&config(100, 0.5, 33)).unwrap();
        let large = generate(&config(250, 0.5, 33)).unwrap();
        let label_ix = schema().len() - 1;
        for (rs, rl) in small.rows.iter().zip(large.rows.iter()) {
            assert_eq!(rs[..label_ix], rl[..label_ix]);
        }
    }

    #[test]
    fn account_numbers_look_like_ibans() {
        let d = generate(&config(100, 0.0, 5)).unwrap();
        let senders = d.column_strings("Sender Account Number").unwrap();
        let domiciles = d.column_strings("Legal Domicile").unwrap();
        for (acct, dom) in senders.iter().zip(domiciles.iter()) {
            assert_eq!(&acct[..2], dom.as_str());
            assert_eq!(acct.len(), 20, "{acct}");
            assert!(acct[2..].chars().all(|c| c.is_ascii_digit()), "{acct}");
        }
    }

    #[test]
    fn zero_disparity_keeps_gender_independent_of_labels() {
        // Pooled chi-square of gender × label within each industry stratum.
        let d = generate(&config(50_000, 0.0, 13)).unwrap();
        let genders = d.column_strings("Gender").unwrap();
        let industries = d.column_strings("Source of Wealth Industry").unwrap();
        let labels = d.labels().unwrap();

        let mut stat = 0.0;
        let mut df = 0usize;
        for industry in INDUSTRIES {
            let mut counts = [[0.0f64; 2]; 2]; // [gender][label]
            for i in 0..labels.len() {
                if industries[i] == industry {
                    let g = usize::from(genders[i] == GENDERS[1]);
                    counts[g][labels[i] as usize] += 1.0;
                }
            }
            let n: f64 = counts.iter().flatten().sum();
            let rows: Vec<f64> = counts.iter().map(|r| r.iter().sum()).collect();
            let cols: Vec<f64> =
                (0..2).map(|c| counts[0][c] + counts[1][c]).collect();
            if rows.iter().chain(cols.iter()).any(|&m| m == 0.0) {
                continue;
            }
            for g in 0..2 {
                for c in 0..2 {
                    let expected = rows[g] * cols[c] / n;
                    stat += (counts[g][c] - expected).powi(2) / expected;
                }
            }
            df += 1;
        }
        // Upper 1% critical values of chi-square for df = 1..=12.
        let critical = [
            6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090, 21.666, 23.209, 24.725,
            26.217,
        ];
        assert!(df >= 1);
        assert!(stat < critical[df - 1], "stat {stat} at df {df}");
    }

    #[test]
    fn planted_disparity_is_monotone_in_strength() {
        let mut gaps = Vec::new();
        for d in [0.0, 0.25, 0.5, 1.0] {
            let data = generate(&config(50_000, d, 11)).unwrap();
            let genders = data.column_strings("Gender").unwrap();
            let labels = data.labels().unwrap();
            let (mut p1, mut pn, mut o1, mut on) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..labels.len() {
                if genders[i] == DISPARITY_GROUP {
                    p1 += labels[i] as f64;
                    pn += 1.0;
                } else {
                    o1 += labels[i] as f64;
                    on += 1.0;
                }
            }
            gaps.push(p1 / pn - o1 / on);
        }
        for w in gaps.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "gaps not monotone: {gaps:?}");
        }
        assert!(gaps[3] > gaps[0] + 0.02, "strength 1.0 should be clearly visible: {gaps:?}");
    }

    #[test]
    fn split_sizes_are_exact_and_stratified() {
        let d = generate(&config(10_000, 0.0, 42)).unwrap();
        let f = SplitFractions { train: 0.6, validation: 0.2, test: 0.2 };
        let s = split(&d, &f, 42).unwrap();
        assert_eq!(s.train.n_rows(), 6_000);
        assert_eq!(s.validation.n_rows(), 2_000);
        assert_eq!(s.test.n_rows(), 2_000);
        let full = label_rate(&d);
        for part in [&s.train, &s.validation, &s.test] {
            assert!((label_rate(part) - full).abs() <= 0.01);
        }
    }

    #[test]
    fn split_is_deterministic_and_partitions_rows() {
        let d = generate(&config(1_000, 0.0, 3)).unwrap();
        let f = SplitFractions { train: 0.6, validation: 0.2, test: 0.2 };
        let a = split(&d, &f, 5).unwrap();
        let b = split(&d, &f, 5).unwrap();
        assert_eq!(a.train.rows, b.train.rows);
        assert_eq!(a.test.rows, b.test.rows);
        let total = a.train.n_rows() + a.validation.n_rows() + a.test.n_rows();
        assert_eq!(total, d.n_rows());
        let c = split(&d, &f, 6).unwrap();
        assert_ne!(a.train.rows, c.train.rows);
    }

    #[test]
    fn split_needs_two_positives_per_part() {
        let mut d = generate(&config(200, 0.0, 8)).unwrap();
        let label_ix = d.label_index().unwrap();
        let mut kept = 0;
        for row in &mut d.rows {
            let is_pos = matches!(&row[label_ix], Cell::Text(s) if s == "1");
            if is_pos {
                kept += 1;
                if kept > 3 {
                    row[label_ix] = Cell::Text("0".into());
                }
            }
        }
        let f = SplitFractions { train: 0.6, validation: 0.2, test: 0.2 };
        let err = split(&d, &f, 1).unwrap_err();
        assert!(matches!(err, SplitError::TooFewPositives { .. }), "{err}");
    }

    #[test]
    fn sidecar_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let data_path = dir.path().join("data.csv");
        let sc = DataSidecar {
            config: config(100, 0.0, 1),
            schema: schema(),
            n_rows: 100,
            label_rate: 0.1,
        };
        write_sidecar(&data_path, &sc).unwrap();
        let back = read_sidecar(&data_path).unwrap();
        assert_eq!(back.config, sc.config);
        assert_eq!(back.schema, sc.schema);
    }
}
