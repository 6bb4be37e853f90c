mod args;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use irt_explain::analysis::{CorrelationMethod, Thresholds};
use irt_explain::dataset::LabeledDataset;
use irt_explain::irt::FitConfig;
use irt_explain::learners::PoolConfig;
use irt_explain::pipeline::{
    file_names, run_explain, run_fit, run_pool, run_simulate, timestamp_now, write_report, ExplainOptions,
    ExplainPaths, PoolOptions, RunManifest, Truth, MATRIX_FILE,
};
use irt_explain::response::{ResponseMatrix, ARTIFICIAL_IDS};
use irt_explain::seed::derive_seed;
use irt_explain::simulator::{SimSpec, ThetaDistribution};
use irt_explain::{Error, Result};

use args::{Cli, Command, ExplainArgs, ExplainOptionArgs, FitArgs, FitOptionArgs, Method, PoolArgs, RunAllArgs, SimulateArgs};

const EXIT_FAILURE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Debug, PartialEq, Eq)]
enum Outcome {
    Done,
    NotConverged,
}

/// Expands `1-3,7` into `[1, 2, 3, 7]`. `none` or an empty string gives no
/// values.
fn parse_counts(spec: &str, what: &str) -> Result<Vec<usize>> {
    let spec = spec.trim();
    if spec.is_empty() || spec.eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    let bad = |part: &str| Error::InvalidArgument(format!("{what}: cannot parse `{part}`"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let lo: usize = lo.trim().parse().map_err(|_| bad(part))?;
                let hi: usize = hi.trim().parse().map_err(|_| bad(part))?;
                if lo > hi {
                    return Err(bad(part));
                }
                out.extend(lo..=hi);
            }
            None => out.push(part.parse().map_err(|_| bad(part))?),
        }
    }
    Ok(out)
}

fn pool_options(a: &PoolArgs) -> Result<PoolOptions> {
    Ok(PoolOptions {
        train_fraction: a.train_frac,
        seed: a.seed,
        label_col: a.label_col.clone(),
        pool: PoolConfig {
            rf_tree_counts: parse_counts(&a.rf_trees, "--rf-trees")?,
            knn_ks: parse_counts(&a.knn, "--knn")?,
            include_gaussian_nb: !a.no_gaussian_nb,
            include_bernoulli_nb: !a.no_bernoulli_nb,
            include_tree: !a.no_tree,
            include_logistic: !a.no_logistic,
            seed: 0,
        },
    })
}

fn fit_config(a: &FitOptionArgs, seed: u64, serial: bool) -> FitConfig {
    FitConfig {
        max_em_iterations: a.max_iter,
        convergence_epsilon: a.epsilon,
        quadrature_points: a.quadrature_points,
        seed: derive_seed(seed, "fit"),
        parallel: !serial,
        ..FitConfig::default()
    }
}

fn explain_options(a: &ExplainOptionArgs, label_col: &str) -> ExplainOptions {
    ExplainOptions {
        respondent: a.respondent.clone(),
        label_col: label_col.to_string(),
        thresholds: Thresholds {
            discrimination_high: a.discrimination_high,
            difficulty_high: a.difficulty_high,
            guessing_high: a.guessing_high,
            reliability_cutoff: a.reliability_cutoff,
        },
        correlation_method: match a.correlation {
            Method::Pearson => CorrelationMethod::Pearson,
            Method::Spearman => CorrelationMethod::Spearman,
        },
        profile_percentile: a.percentile,
        icc_pair: a.icc_items.as_ref().map(|v| (v[0].clone(), v[1].clone())),
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned())
}

fn cmd_pool(a: &PoolArgs) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(&a.dataset).map_err(|e| Error::Io {
        path: a.dataset.clone(),
        source: e,
    })?;
    let dataset = LabeledDataset::parse_csv(&dataset_name(&a.dataset), &text, &a.label_col)?;
    let artifacts = run_pool(&dataset, &pool_options(a)?)?;
    eprintln!(
        "pool: {} respondents x {} test instances",
        artifacts.matrix.n_respondents(),
        artifacts.matrix.n_items()
    );
    artifacts.write(&a.out.out_dir)
}

fn cmd_fit(a: &FitArgs, serial: bool) -> Result<(Vec<PathBuf>, Outcome)> {
    let matrix = ResponseMatrix::read_csv(&a.matrix)?;
    let truth = match (&a.truth_items, &a.truth_thetas) {
        (Some(i), Some(t)) => Some(Truth::read(i, t)?),
        _ => None,
    };
    let name = a
        .matrix
        .file_name()
        .map_or_else(|| MATRIX_FILE.to_string(), |n| n.to_string_lossy().into_owned());
    let artifacts = run_fit(&matrix, &name, &fit_config(&a.fit, a.seed, serial), truth.as_ref())?;
    let log = &artifacts.log;
    eprintln!(
        "fit: {} iterations, converged = {}, penalized log-likelihood = {:.6}",
        log.iterations, log.converged, log.log_likelihood
    );
    if let Some(r) = &artifacts.recovery {
        eprintln!(
            "recovery: corr(a) = {:.4}, corr(b | |a| >= 0.5) = {:.4}, sign(a) = {:.4}, rmse(c) = {:.4}, corr(theta) = {:.4}",
            r.corr_a, r.corr_b_filtered, r.sign_agreement_a, r.rmse_c, r.corr_theta
        );
    }
    let outcome = if log.converged {
        Outcome::Done
    } else {
        eprintln!("warning: estimation did not converge within {} iterations", a.fit.max_iter);
        Outcome::NotConverged
    };
    Ok((artifacts.write(&a.out.out_dir)?, outcome))
}

fn explain_into(paths: &ExplainPaths, options: &ExplainOptions, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let report = run_explain(paths, options)?;
    let d = &report.model_diagnostics;
    eprintln!(
        "explain: {} ability {:.4}, accuracy {:.4}, {} unreliable instances ({} wrong)",
        report.metadata.respondent, d.ability, d.accuracy_total, d.n_unreliable, d.n_unreliable_and_wrong
    );
    write_report(&report, out_dir)
}

fn cmd_explain(a: &ExplainArgs) -> Result<Vec<PathBuf>> {
    let paths = ExplainPaths {
        items: a.items.clone(),
        abilities: a.abilities.clone(),
        test: a.test.clone(),
        predictions: a.predictions.clone(),
        matrix: a.matrix.clone(),
    };
    explain_into(&paths, &explain_options(&a.explain, &a.label_col), &a.out.out_dir)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Vec<PathBuf>> {
    let spec = SimSpec {
        n_respondents: a.respondents,
        n_items: a.items,
        a_range: (a.a_min, a.a_max),
        a_abs_min: a.a_abs_min,
        b_range: (a.b_min, a.b_max),
        c_range: (a.c_min, a.c_max),
        theta: match a.theta_fixed {
            Some(value) => ThetaDistribution::Fixed { value },
            None => ThetaDistribution::StandardNormal,
        },
        seed: a.seed,
    };
    let (log, written) = run_simulate(&spec, a.check_deciles, &a.out.out_dir)?;
    eprintln!("simulate: matrix mean {:.4}", log.matrix_mean);
    if let Some(deciles) = &log.deciles {
        let failed = deciles.iter().filter(|d| !d.within_3_sigma).count();
        eprintln!("decile calibration: {failed} of {} deciles outside 3 sigma", deciles.len());
        if failed > 0 {
            return Err(Error::InvalidArgument(format!(
                "decile calibration failed for {failed} decile(s)"
            )));
        }
    }
    Ok(written)
}

fn cmd_run_all(a: &RunAllArgs, serial: bool) -> Result<(Vec<PathBuf>, Outcome)> {
    let dir = &a.out.out_dir;
    let mut written = cmd_pool(&a.pool_args())?;
    let fit = FitArgs {
        matrix: dir.join(MATRIX_FILE),
        seed: a.seed,
        fit: a.fit.clone(),
        truth_items: None,
        truth_thetas: None,
        out: a.out.clone(),
    };
    let (fit_files, outcome) = cmd_fit(&fit, serial)?;
    written.extend(fit_files);
    written.extend(explain_into(
        &ExplainPaths::in_dir(dir),
        &explain_options(&a.explain, &a.label_col),
        dir,
    )?);
    Ok((written, outcome))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Pool(_) => "pool",
        Command::Fit(_) => "fit",
        Command::Explain(_) => "explain",
        Command::Simulate(_) => "simulate",
        Command::RunAll(_) => "run-all",
        Command::Replay(_) => "replay",
        Command::Validate(_) => "validate",
    }
}

fn inputs_and_seed(c: &Command) -> (Vec<PathBuf>, Option<u64>) {
    match c {
        Command::Pool(a) => (vec![a.dataset.clone()], Some(a.seed)),
        Command::Fit(a) => {
            let mut v = vec![a.matrix.clone()];
            v.extend(a.truth_items.clone());
            v.extend(a.truth_thetas.clone());
            (v, Some(a.seed))
        }
        Command::Explain(a) => {
            let mut v = vec![a.items.clone(), a.abilities.clone(), a.test.clone(), a.predictions.clone()];
            v.extend(a.matrix.clone());
            (v, None)
        }
        Command::Simulate(a) => (Vec::new(), Some(a.seed)),
        Command::RunAll(a) => (vec![a.dataset.clone()], Some(a.seed)),
        Command::Replay(a) => (vec![a.manifest.clone()], None),
        Command::Validate(a) => (vec![a.matrix.clone()], None),
    }
}

fn out_dir(c: &Command) -> Option<&Path> {
    match c {
        Command::Pool(a) => Some(&a.out.out_dir),
        Command::Fit(a) => Some(&a.out.out_dir),
        Command::Explain(a) => Some(&a.out.out_dir),
        Command::Simulate(a) => Some(&a.out.out_dir),
        Command::RunAll(a) => Some(&a.out.out_dir),
        Command::Replay(_) | Command::Validate(_) => None,
    }
}

fn set_out_dir(c: &mut Command, dir: PathBuf) {
    match c {
        Command::Pool(a) => a.out.out_dir = dir,
        Command::Fit(a) => a.out.out_dir = dir,
        Command::Explain(a) => a.out.out_dir = dir,
        Command::Simulate(a) => a.out.out_dir = dir,
        Command::RunAll(a) => a.out.out_dir = dir,
        Command::Replay(_) | Command::Validate(_) => {}
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    if cli.serial {
        // A global pool can only be configured once; later calls are no-ops.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    let (written, outcome) = match &cli.command {
        Command::Pool(a) => (cmd_pool(a)?, Outcome::Done),
        Command::Fit(a) => cmd_fit(a, cli.serial)?,
        Command::Explain(a) => (cmd_explain(a)?, Outcome::Done),
        Command::Simulate(a) => (cmd_simulate(a)?, Outcome::Done),
        Command::RunAll(a) => cmd_run_all(a, cli.serial)?,
        Command::Replay(a) => {
            let manifest = RunManifest::read(&a.manifest)?;
            let mut replayed: Cli = serde_json::from_value(manifest.arguments)?;
            replayed.serial |= cli.serial;
            replayed.strict |= cli.strict;
            if let Some(dir) = &a.out_dir {
                set_out_dir(&mut replayed.command, dir.clone());
            }
            return run(&replayed);
        }
        Command::Validate(a) => {
            let matrix = ResponseMatrix::read_csv(&a.matrix)?;
            let missing: Vec<&str> = ARTIFICIAL_IDS
                .into_iter()
                .filter(|id| matrix.respondent_index(id).is_none())
                .collect();
            println!("{}: {} respondents x {} items", a.matrix.display(), matrix.n_respondents(), matrix.n_items());
            if !missing.is_empty() {
                println!("artificial respondents absent: {}", missing.join(", "));
            }
            return Ok(Outcome::Done);
        }
    };
    let (inputs, seed) = inputs_and_seed(&cli.command);
    let dir = out_dir(&cli.command).expect("non-replay commands have an output directory");
    let manifest = RunManifest {
        subcommand: command_name(&cli.command).to_string(),
        arguments: serde_json::to_value(cli)?,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        output_dir: dir.display().to_string(),
        outputs: file_names(&written),
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: timestamp_now(),
    };
    manifest.write(dir)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) if cli.strict => ExitCode::from(EXIT_NOT_CONVERGED),
        Ok(Outcome::NotConverged) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_FAILURE })
        }
    }
}
