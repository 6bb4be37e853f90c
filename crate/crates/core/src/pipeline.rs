//! File-level pipeline stages: pool, fit, explain and simulate, plus the
//! run manifest. Every stage reads and writes the formats documented in the
//! owning modules, so stages compose through a shared output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{explain, CorrelationMethod, ExplainInputs, ExplanationReport, PlotSeries, Thresholds};
use crate::dataset::{stratified_split, LabeledDataset, SplitPair};
use crate::error::{Error, Result};
use crate::irt::io::{
    abilities_from_csv, abilities_to_csv, format_float, items_from_csv, items_to_csv, read_text, thetas_from_csv,
    thetas_to_csv, write_text,
};
use crate::irt::{fit_3pl, AbilityEstimate, Degeneracy, FitConfig, FitResult, ItemParams};
use crate::learners::{predict_pool, train_pool, PoolConfig};
use crate::response::{artificial_predictions, assemble_matrix, responses_from_predictions, ResponseMatrix};
use crate::seed::derive_seed;
use crate::simulator::{decile_calibration, score_recovery, simulate, DecileCheck, RecoveryFloors, RecoveryReport, SimSpec};

pub const MATRIX_FILE: &str = "matrix.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const SPLIT_FILE: &str = "split.csv";
pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const POOL_LOG_FILE: &str = "pool_log.json";
pub const ITEMS_FILE: &str = "items.csv";
pub const ABILITIES_FILE: &str = "abilities.csv";
pub const FIT_LOG_FILE: &str = "fit_log.json";
pub const RECOVERY_FILE: &str = "recovery.json";
pub const REPORT_FILE: &str = "report.json";
pub const TRUTH_ITEMS_FILE: &str = "truth_items.csv";
pub const TRUTH_THETAS_FILE: &str = "truth_thetas.csv";
pub const SIMULATE_LOG_FILE: &str = "simulate_log.json";
pub const PLOT_HISTOGRAM_FILE: &str = "plot_histograms.csv";
pub const PLOT_SCATTER_FILE: &str = "plot_scatter.csv";
pub const PLOT_PROBABILITY_FILE: &str = "plot_probability.csv";
pub const PLOT_ICC_FILE: &str = "plot_icc.csv";

pub const DEFAULT_LABEL_COL: &str = "label";
pub const DEFAULT_RESPONDENT: &str = "rf_100";
pub const DEFAULT_PROFILE_PERCENTILE: f64 = 90.0;

/// Seeds of each stage, derived from the single run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub split: u64,
    pub pool: u64,
    pub artificial: [u64; 3],
    pub fit: u64,
}

impl StageSeeds {
    pub fn new(seed: u64) -> Self {
        Self {
            split: derive_seed(seed, "split"),
            pool: derive_seed(seed, "pool"),
            artificial: [1, 2, 3].map(|k| derive_seed(seed, &format!("artificial/rand{k}"))),
            fit: derive_seed(seed, "fit"),
        }
    }
}

fn base_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

// ---------------------------------------------------------------- pool

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolOptions {
    pub train_fraction: f64,
    pub seed: u64,
    pub label_col: String,
    /// The member seed inside is replaced by the derived pool seed.
    pub pool: PoolConfig,
}

impl Default for PoolOptions {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            seed: 0,
            label_col: DEFAULT_LABEL_COL.into(),
            pool: PoolConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolLog {
    pub dataset: String,
    pub n_instances: usize,
    pub n_features: usize,
    pub label_col: String,
    pub train_fraction: f64,
    pub seed: u64,
    pub stage_seeds: StageSeeds,
    pub train_class_counts: [usize; 2],
    pub test_class_counts: [usize; 2],
    pub train_majority_class: u8,
    pub members: Vec<String>,
    pub artificial: Vec<String>,
    pub forest: serde_json::Value,
    pub pool_config: PoolConfig,
}

#[derive(Debug, Clone)]
pub struct PoolArtifacts {
    pub split: SplitPair,
    pub matrix: ResponseMatrix,
    /// Predicted classes, same layout as the matrix.
    pub predictions: ResponseMatrix,
    pub log: PoolLog,
}

pub fn item_ids_for(indices: &[usize]) -> Vec<String> {
    indices.iter().map(|i| format!("x{i}")).collect()
}

pub fn run_pool(dataset: &LabeledDataset, options: &PoolOptions) -> Result<PoolArtifacts> {
    let seeds = StageSeeds::new(options.seed);
    let split = stratified_split(dataset, options.train_fraction, seeds.split)?;
    let config = PoolConfig {
        seed: seeds.pool,
        ..options.pool.clone()
    };
    let pool = train_pool(&split.train, &config)?;
    let member_predictions = predict_pool(&pool, &split.test)?;
    let truth = split.test.labels();
    let majority = split.train.majority_class();

    let mut predicted: Vec<(String, Vec<u8>)> = pool
        .member_ids()
        .into_iter()
        .map(String::from)
        .zip(member_predictions)
        .collect();
    let artificial = artificial_predictions(truth, majority, seeds.artificial);
    let artificial_ids = artificial.iter().map(|(id, _)| id.clone()).collect();
    predicted.extend(artificial);

    let responses = predicted
        .iter()
        .map(|(id, p)| Ok((id.clone(), responses_from_predictions(p, truth)?)))
        .collect::<Result<Vec<_>>>()?;
    let item_ids = item_ids_for(&split.test_indices);
    let matrix = assemble_matrix(item_ids.clone(), responses)?;
    let predictions = assemble_matrix(item_ids, predicted)?;

    let log = PoolLog {
        dataset: dataset.name().to_string(),
        n_instances: dataset.len(),
        n_features: dataset.n_features(),
        label_col: options.label_col.clone(),
        train_fraction: options.train_fraction,
        seed: options.seed,
        stage_seeds: seeds,
        train_class_counts: split.train.class_counts(),
        test_class_counts: split.test.class_counts(),
        train_majority_class: majority,
        members: pool.member_ids().into_iter().map(String::from).collect(),
        artificial: artificial_ids,
        forest: json!({
            "bootstrap_size": "n",
            "max_depth": null,
            "max_features": "floor(sqrt(d))",
            "criterion": "gini",
        }),
        pool_config: config,
    };
    Ok(PoolArtifacts {
        split,
        matrix,
        predictions,
        log,
    })
}

pub fn split_to_csv(split: &SplitPair) -> String {
    let mut rows: Vec<(usize, &str)> = split
        .train_indices
        .iter()
        .map(|&i| (i, "train"))
        .chain(split.test_indices.iter().map(|&i| (i, "test")))
        .collect();
    rows.sort_unstable();
    let mut out = String::from("row,split\n");
    for (i, side) in rows {
        let _ = writeln!(out, "{i},{side}");
    }
    out
}

impl PoolArtifacts {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        ensure_dir(dir)?;
        let label = &self.log.label_col;
        let files = [
            (MATRIX_FILE, self.matrix.to_csv_string()),
            (PREDICTIONS_FILE, self.predictions.to_csv_string()),
            (SPLIT_FILE, split_to_csv(&self.split)),
            (TRAIN_FILE, self.split.train.to_csv_string(label)),
            (TEST_FILE, self.split.test.to_csv_string(label)),
        ];
        let mut written = Vec::new();
        for (name, text) in files {
            let path = dir.join(name);
            write_text(&path, &text)?;
            written.push(path);
        }
        let log_path = dir.join(POOL_LOG_FILE);
        write_json(&log_path, &self.log)?;
        written.push(log_path);
        Ok(written)
    }
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateEntry {
    pub id: String,
    pub flag: Degeneracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitLog {
    pub matrix: String,
    pub n_respondents: usize,
    pub n_items: usize,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
    pub trace: Vec<f64>,
    pub degenerate_items: Vec<DegenerateEntry>,
    pub degenerate_respondents: Vec<DegenerateEntry>,
    pub config: FitConfig,
}

#[derive(Debug, Clone)]
pub struct FitArtifacts {
    pub fit: FitResult,
    pub log: FitLog,
    pub recovery: Option<RecoveryReport>,
}

/// True parameters of a simulated matrix, keyed by the matrix ids.
#[derive(Debug, Clone)]
pub struct Truth {
    pub item_ids: Vec<String>,
    pub items: Vec<ItemParams>,
    pub respondent_ids: Vec<String>,
    pub thetas: Vec<f64>,
}

impl Truth {
    pub fn read(items_path: &Path, thetas_path: &Path) -> Result<Self> {
        let (item_ids, items) = items_from_csv(&read_text(items_path)?)?;
        let (respondent_ids, thetas) = thetas_from_csv(&read_text(thetas_path)?)?;
        Ok(Self {
            item_ids,
            items,
            respondent_ids,
            thetas,
        })
    }
}

fn degenerate_entries(ids: &[String], flags: impl Iterator<Item = Degeneracy>) -> Vec<DegenerateEntry> {
    ids.iter()
        .zip(flags)
        .filter(|(_, f)| *f != Degeneracy::None)
        .map(|(id, flag)| DegenerateEntry { id: id.clone(), flag })
        .collect()
}

pub fn run_fit(
    matrix: &ResponseMatrix,
    matrix_name: &str,
    config: &FitConfig,
    truth: Option<&Truth>,
) -> Result<FitArtifacts> {
    let fit = fit_3pl(matrix, config)?;
    let recovery = match truth {
        None => None,
        Some(t) => {
            if t.item_ids != fit.item_ids {
                return Err(Error::invalid("truth item ids do not match the matrix columns"));
            }
            if t.respondent_ids != fit.respondent_ids {
                return Err(Error::invalid("truth respondent ids do not match the matrix rows"));
            }
            Some(score_recovery(&t.items, &t.thetas, &fit, RecoveryFloors::default())?)
        }
    };
    let log = FitLog {
        matrix: matrix_name.to_string(),
        n_respondents: matrix.n_respondents(),
        n_items: matrix.n_items(),
        converged: fit.converged,
        iterations: fit.iterations,
        log_likelihood: fit.log_likelihood,
        trace: fit.trace.clone(),
        degenerate_items: degenerate_entries(&fit.item_ids, fit.item_flags.iter().copied()),
        degenerate_respondents: degenerate_entries(&fit.respondent_ids, fit.abilities.iter().map(|a| a.degenerate)),
        config: *config,
    };
    Ok(FitArtifacts { fit, log, recovery })
}

impl FitArtifacts {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        ensure_dir(dir)?;
        let items = dir.join(ITEMS_FILE);
        write_text(&items, &items_to_csv(&self.fit.item_ids, &self.fit.items))?;
        let abilities = dir.join(ABILITIES_FILE);
        write_text(&abilities, &abilities_to_csv(&self.fit.respondent_ids, &self.fit.abilities))?;
        let log = dir.join(FIT_LOG_FILE);
        write_json(&log, &self.log)?;
        let mut written = vec![items, abilities, log];
        if let Some(r) = &self.recovery {
            let path = dir.join(RECOVERY_FILE);
            write_json(&path, r)?;
            written.push(path);
        }
        Ok(written)
    }
}

// ---------------------------------------------------------------- explain

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainOptions {
    pub respondent: String,
    pub label_col: String,
    pub thresholds: Thresholds,
    pub correlation_method: CorrelationMethod,
    pub profile_percentile: f64,
    /// Item ids of the ICC pair; defaults to the max-`a` and min-`a` items.
    pub icc_pair: Option<(String, String)>,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        Self {
            respondent: DEFAULT_RESPONDENT.into(),
            label_col: DEFAULT_LABEL_COL.into(),
            thresholds: Thresholds::default(),
            correlation_method: CorrelationMethod::Pearson,
            profile_percentile: DEFAULT_PROFILE_PERCENTILE,
            icc_pair: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExplainPaths {
    pub items: PathBuf,
    pub abilities: PathBuf,
    pub test: PathBuf,
    pub predictions: PathBuf,
    pub matrix: Option<PathBuf>,
}

impl ExplainPaths {
    /// The standard file names inside a pool/fit output directory.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            items: dir.join(ITEMS_FILE),
            abilities: dir.join(ABILITIES_FILE),
            test: dir.join(TEST_FILE),
            predictions: dir.join(PREDICTIONS_FILE),
            matrix: Some(dir.join(MATRIX_FILE)),
        }
    }
}

fn lookup<'a, T>(ids: &[String], values: &'a [T], id: &str) -> Result<&'a T> {
    ids.iter()
        .position(|x| x == id)
        .map(|k| &values[k])
        .ok_or_else(|| Error::UnknownRespondent {
            id: id.to_string(),
            available: ids.to_vec(),
        })
}

/// Settings recorded in the report metadata, read from stage logs that sit
/// next to the inputs (when present).
fn upstream_settings(paths: &ExplainPaths) -> Result<BTreeMap<String, serde_json::Value>> {
    let mut settings = BTreeMap::new();
    let sibling = |p: &Path, name: &str| p.parent().map(|d| d.join(name)).filter(|f| f.is_file());
    if let Some(path) = sibling(&paths.predictions, POOL_LOG_FILE) {
        let log: PoolLog = read_json(&path)?;
        settings.insert(
            "pool".to_string(),
            json!({
                "seed": log.seed,
                "stage_seeds": log.stage_seeds,
                "train_fraction": log.train_fraction,
                "members": log.members.len(),
                "forest": log.forest,
                "pool_config": log.pool_config,
            }),
        );
    }
    if let Some(path) = sibling(&paths.items, FIT_LOG_FILE) {
        let log: FitLog = read_json(&path)?;
        settings.insert(
            "fit".to_string(),
            json!({
                "converged": log.converged,
                "iterations": log.iterations,
                "config": log.config,
            }),
        );
    }
    Ok(settings)
}

pub fn run_explain(paths: &ExplainPaths, options: &ExplainOptions) -> Result<ExplanationReport> {
    let (item_ids, items) = items_from_csv(&read_text(&paths.items)?)?;
    let (respondent_ids, abilities) = abilities_from_csv(&read_text(&paths.abilities)?)?;
    let test = LabeledDataset::read_csv(&paths.test, &options.label_col)?;
    let predictions = ResponseMatrix::read_csv(&paths.predictions)?;
    let matrix = paths.matrix.as_ref().map(ResponseMatrix::read_csv).transpose()?;

    if predictions.item_ids() != item_ids.as_slice() {
        return Err(Error::invalid(format!(
            "item ids in {} do not match {}",
            base_name(&paths.predictions),
            base_name(&paths.items)
        )));
    }
    let ability: &AbilityEstimate = lookup(&respondent_ids, &abilities, &options.respondent)?;
    let k = predictions
        .respondent_index(&options.respondent)
        .ok_or_else(|| Error::UnknownRespondent {
            id: options.respondent.clone(),
            available: predictions.respondent_ids().to_vec(),
        })?;
    let model_row = match &matrix {
        None => None,
        Some(m) => {
            if m.item_ids() != item_ids.as_slice() {
                return Err(Error::invalid("matrix item ids do not match the item parameters"));
            }
            let r = m.respondent_index(&options.respondent).ok_or_else(|| Error::UnknownRespondent {
                id: options.respondent.clone(),
                available: m.respondent_ids().to_vec(),
            })?;
            Some(m.row(r))
        }
    };
    let icc_pair = match &options.icc_pair {
        None => None,
        Some((x, y)) => {
            let find = |id: &str| {
                item_ids
                    .iter()
                    .position(|i| i == id)
                    .ok_or_else(|| Error::invalid(format!("unknown item `{id}` for the ICC pair")))
            };
            Some((find(x)?, find(y)?))
        }
    };

    let mut inputs = BTreeMap::new();
    inputs.insert("items".to_string(), base_name(&paths.items));
    inputs.insert("abilities".to_string(), base_name(&paths.abilities));
    inputs.insert("test".to_string(), base_name(&paths.test));
    inputs.insert("predictions".to_string(), base_name(&paths.predictions));
    if let Some(m) = &paths.matrix {
        inputs.insert("matrix".to_string(), base_name(m));
    }

    explain(ExplainInputs {
        item_ids: &item_ids,
        items: &items,
        respondent: &options.respondent,
        theta: ability.theta,
        test: &test,
        predictions: predictions.row(k),
        model_row,
        thresholds: options.thresholds,
        correlation_method: options.correlation_method,
        profile_percentile: options.profile_percentile,
        icc_pair,
        inputs,
        settings: upstream_settings(paths)?,
    })
}

pub fn plot_csvs(plots: &PlotSeries) -> Vec<(&'static str, String)> {
    let mut hist = String::from("parameter,class,bin_start,count\n");
    for h in &plots.histograms {
        for s in &h.series {
            for (start, count) in h.bin_starts.iter().zip(&s.counts) {
                let _ = writeln!(hist, "{},{},{},{count}", h.parameter, s.class, format_float(*start));
            }
        }
    }
    let mut scatter = String::from("item,discrimination,difficulty,guessing,class\n");
    for p in &plots.scatter {
        let _ = writeln!(
            scatter,
            "{},{},{},{},{}",
            p.item,
            format_float(p.a),
            format_float(p.b),
            format_float(p.c),
            p.class
        );
    }
    let mut prob = String::from("rank,item,discrimination,probability,class\n");
    for p in &plots.probability_by_discrimination {
        let _ = writeln!(
            prob,
            "{},{},{},{},{}",
            p.rank,
            p.item,
            format_float(p.a),
            format_float(p.probability),
            p.class
        );
    }
    let pair = &plots.icc_pair;
    let mut icc = String::from("theta");
    for c in &pair.curves {
        let _ = write!(icc, ",{}", c.item);
    }
    icc.push('\n');
    for (k, t) in pair.theta_grid.iter().enumerate() {
        icc.push_str(&format_float(*t));
        for c in &pair.curves {
            let _ = write!(icc, ",{}", format_float(c.probabilities[k]));
        }
        icc.push('\n');
    }
    vec![
        (PLOT_HISTOGRAM_FILE, hist),
        (PLOT_SCATTER_FILE, scatter),
        (PLOT_PROBABILITY_FILE, prob),
        (PLOT_ICC_FILE, icc),
    ]
}

pub fn write_report(report: &ExplanationReport, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let path = dir.join(REPORT_FILE);
    write_text(&path, &report.to_json()?)?;
    let mut written = vec![path];
    for (name, text) in plot_csvs(&report.plot_series) {
        let path = dir.join(name);
        write_text(&path, &text)?;
        written.push(path);
    }
    Ok(written)
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateLog {
    pub spec: SimSpec,
    pub matrix_mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deciles: Option<Vec<DecileCheck>>,
}

pub fn run_simulate(spec: &SimSpec, check_deciles: bool, dir: &Path) -> Result<(SimulateLog, Vec<PathBuf>)> {
    let sim = simulate(spec)?;
    ensure_dir(dir)?;
    let m = &sim.matrix;
    let files = [
        (MATRIX_FILE, m.to_csv_string()),
        (TRUTH_ITEMS_FILE, items_to_csv(m.item_ids(), &sim.items)),
        (TRUTH_THETAS_FILE, thetas_to_csv(m.respondent_ids(), &sim.thetas)),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        write_text(&path, &text)?;
        written.push(path);
    }
    let total: usize = m.column_sums().iter().sum();
    let log = SimulateLog {
        spec: *spec,
        matrix_mean: total as f64 / (m.n_respondents() * m.n_items()) as f64,
        deciles: check_deciles.then(|| decile_calibration(&sim)),
    };
    let path = dir.join(SIMULATE_LOG_FILE);
    write_json(&path, &log)?;
    written.push(path);
    Ok((log, written))
}

// ---------------------------------------------------------------- manifest

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// The full argument set, sufficient to replay the run.
    pub arguments: serde_json::Value,
    pub inputs: Vec<String>,
    pub output_dir: String,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
}

pub fn manifest_file_name(subcommand: &str) -> String {
    format!("manifest_{subcommand}.json")
}

pub fn timestamp_now() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        })
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        ensure_dir(dir)?;
        let path = dir.join(manifest_file_name(&self.subcommand));
        write_json(&path, self)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

pub fn file_names(paths: &[PathBuf]) -> Vec<String> {
    let mut names: Vec<String> = paths.iter().map(|p| base_name(p)).collect();
    names.sort();
    names.dedup();
    names
}
