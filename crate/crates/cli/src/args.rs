use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Parser, Serialize, Deserialize)]
#[command(name = "irtx", version, about = "Explain binary classifiers with 3PL item response theory")]
pub struct Cli {
    /// Force single-threaded execution (the determinism reference path).
    #[arg(long, global = true)]
    pub serial: bool,

    /// Exit with status 3 when estimation does not converge.
    #[arg(long, global = true)]
    pub strict: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Split a dataset, train the classifier pool and write the response matrix.
    Pool(PoolArgs),
    /// Fit the 3PL model to a response matrix.
    Fit(FitArgs),
    /// Build the explanation report for one respondent.
    Explain(ExplainArgs),
    /// Simulate a response matrix from known parameters.
    Simulate(SimulateArgs),
    /// Run pool, fit and explain into one output directory.
    RunAll(RunAllArgs),
    /// Re-run a command from a manifest written by an earlier run.
    Replay(ReplayArgs),
    /// Check a response-matrix CSV and print its shape.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = "IRTX_OUT_DIR", default_value = "irtx-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PoolArgs {
    /// Dataset CSV with numeric features and a 0/1 label column.
    #[arg(long)]
    pub dataset: PathBuf,

    #[arg(long, default_value = "label")]
    pub label_col: String,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 0.7)]
    pub train_frac: f64,

    /// Forest sizes, e.g. `1-120,3,5,100`; `none` for no forests.
    #[arg(long, default_value = "1-120,3,5,100")]
    pub rf_trees: String,

    /// Neighbour counts, e.g. `2,3,5,8`; `none` for no kNN members.
    #[arg(long, default_value = "2,3,5,8")]
    pub knn: String,

    #[arg(long)]
    pub no_gaussian_nb: bool,

    #[arg(long)]
    pub no_bernoulli_nb: bool,

    #[arg(long)]
    pub no_tree: bool,

    #[arg(long)]
    pub no_logistic: bool,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitOptionArgs {
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,

    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,

    #[arg(long, default_value_t = 61)]
    pub quadrature_points: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[arg(long)]
    pub matrix: PathBuf,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    pub fit: FitOptionArgs,

    /// True item parameters (as written by `simulate`); enables recovery scoring.
    #[arg(long, requires = "truth_thetas")]
    pub truth_items: Option<PathBuf>,

    /// True abilities (as written by `simulate`).
    #[arg(long, requires = "truth_items")]
    pub truth_thetas: Option<PathBuf>,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Pearson,
    Spearman,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExplainOptionArgs {
    /// Respondent (classifier) to explain.
    #[arg(long, default_value = "rf_100")]
    pub respondent: String,

    #[arg(long, value_enum, default_value_t = Method::Pearson)]
    pub correlation: Method,

    #[arg(long, default_value_t = 90.0)]
    pub percentile: f64,

    /// Two item ids for the ICC comparison, e.g. `x3,x17`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub icc_items: Option<Vec<String>>,

    #[arg(long, default_value_t = 0.0)]
    pub discrimination_high: f64,

    #[arg(long, default_value_t = 0.0)]
    pub difficulty_high: f64,

    #[arg(long, default_value_t = 0.2)]
    pub guessing_high: f64,

    #[arg(long, default_value_t = 0.5)]
    pub reliability_cutoff: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExplainArgs {
    #[arg(long)]
    pub items: PathBuf,

    #[arg(long)]
    pub abilities: PathBuf,

    /// Test split CSV aligned with the items.
    #[arg(long)]
    pub test: PathBuf,

    /// Predicted classes per respondent (same layout as the matrix).
    #[arg(long)]
    pub predictions: PathBuf,

    /// Response matrix to cross-check the respondent's row against.
    #[arg(long)]
    pub matrix: Option<PathBuf>,

    #[arg(long, default_value = "label")]
    pub label_col: String,

    #[command(flatten)]
    pub explain: ExplainOptionArgs,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 150)]
    pub respondents: usize,

    #[arg(long, default_value_t = 100)]
    pub items: usize,

    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    pub a_min: f64,

    #[arg(long, default_value_t = 2.5, allow_negative_numbers = true)]
    pub a_max: f64,

    /// Redraw discriminations with |a| below this.
    #[arg(long, default_value_t = 0.3)]
    pub a_abs_min: f64,

    #[arg(long, default_value_t = -2.5, allow_negative_numbers = true)]
    pub b_min: f64,

    #[arg(long, default_value_t = 2.5, allow_negative_numbers = true)]
    pub b_max: f64,

    #[arg(long, default_value_t = 0.0)]
    pub c_min: f64,

    #[arg(long, default_value_t = 0.3)]
    pub c_max: f64,

    /// Give every respondent this ability instead of drawing from N(0, 1).
    #[arg(long, allow_negative_numbers = true)]
    pub theta_fixed: Option<f64>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Check cell means per probability decile against a 3-sigma binomial band.
    #[arg(long)]
    pub check_deciles: bool,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RunAllArgs {
    #[arg(long)]
    pub dataset: PathBuf,

    #[arg(long, default_value = "label")]
    pub label_col: String,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 0.7)]
    pub train_frac: f64,

    #[arg(long, default_value = "1-120,3,5,100")]
    pub rf_trees: String,

    #[arg(long, default_value = "2,3,5,8")]
    pub knn: String,

    #[arg(long)]
    pub no_gaussian_nb: bool,

    #[arg(long)]
    pub no_bernoulli_nb: bool,

    #[arg(long)]
    pub no_tree: bool,

    #[arg(long)]
    pub no_logistic: bool,

    #[command(flatten)]
    pub fit: FitOptionArgs,

    #[command(flatten)]
    pub explain: ExplainOptionArgs,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written by a previous run.
    #[arg(long)]
    pub manifest: PathBuf,

    /// Write outputs here instead of the manifest's output directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ValidateArgs {
    /// Response matrix CSV.
    #[arg(long)]
    pub matrix: PathBuf,
}

impl RunAllArgs {
    pub fn pool_args(&self) -> PoolArgs {
        PoolArgs {
            dataset: self.dataset.clone(),
            label_col: self.label_col.clone(),
            seed: self.seed,
            train_frac: self.train_frac,
            rf_trees: self.rf_trees.clone(),
            knn: self.knn.clone(),
            no_gaussian_nb: self.no_gaussian_nb,
            no_bernoulli_nb: self.no_bernoulli_nb,
            no_tree: self.no_tree,
            no_logistic: self.no_logistic,
            out: self.out.clone(),
        }
    }
}
