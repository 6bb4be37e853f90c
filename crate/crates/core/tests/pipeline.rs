use std::path::PathBuf;

use irt_explain::analysis::validate_report;
use irt_explain::dataset::LabeledDataset;
use irt_explain::irt::io::{abilities_from_csv, abilities_to_csv, items_from_csv, items_to_csv, read_text};
use irt_explain::irt::FitConfig;
use irt_explain::pipeline::{
    run_explain, run_fit, run_pool, run_simulate, write_report, ExplainOptions, ExplainPaths, PoolOptions, Truth,
    ABILITIES_FILE, ITEMS_FILE, MATRIX_FILE, REPORT_FILE, SPLIT_FILE, TRUTH_ITEMS_FILE, TRUTH_THETAS_FILE,
};
use irt_explain::response::ResponseMatrix;
use irt_explain::simulator::SimSpec;

fn toy() -> LabeledDataset {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/toy.csv");
    LabeledDataset::read_csv(path, "label").unwrap()
}

#[test]
fn pool_on_toy_dataset() {
    let ds = toy();
    assert_eq!((ds.len(), ds.n_features()), (40, 4));
    let options = PoolOptions {
        seed: 7,
        ..PoolOptions::default()
    };
    let out = run_pool(&ds, &options).unwrap();
    let m = &out.matrix;
    assert_eq!(m.n_respondents(), 138);
    assert_eq!(m.n_items(), 12);

    let mean = |id: &str| {
        let row = m.row(m.respondent_index(id).unwrap());
        row.iter().map(|&v| f64::from(v)).sum::<f64>() / row.len() as f64
    };
    assert_eq!(mean("optimal"), 1.0);
    assert_eq!(mean("pessimal"), 0.0);
    let majority = out.split.train.majority_class();
    let freq = out.split.test.labels().iter().filter(|&&l| l == majority).count() as f64 / 12.0;
    assert_eq!(mean("majority"), freq);
    assert!((mean("minority") - (1.0 - freq)).abs() < 1e-12);

    let again = run_pool(&ds, &options).unwrap();
    assert_eq!(again.matrix, out.matrix);
    assert_eq!(again.predictions, out.predictions);

    let dir = tempfile::tempdir().unwrap();
    out.write(dir.path()).unwrap();
    let split = read_text(dir.path().join(SPLIT_FILE)).unwrap();
    assert_eq!(split.lines().count(), 41);
    assert_eq!(split.lines().filter(|l| l.ends_with(",test")).count(), 12);
    let m2 = ResponseMatrix::read_csv(dir.path().join(MATRIX_FILE)).unwrap();
    assert_eq!(&m2, m);
}

#[test]
fn fit_with_truth_reports_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SimSpec {
        n_respondents: 100,
        n_items: 40,
        ..SimSpec::with_seed(3)
    };
    run_simulate(&spec, true, dir.path()).unwrap();
    let matrix = ResponseMatrix::read_csv(dir.path().join(MATRIX_FILE)).unwrap();
    let truth = Truth::read(&dir.path().join(TRUTH_ITEMS_FILE), &dir.path().join(TRUTH_THETAS_FILE)).unwrap();
    let fit = run_fit(&matrix, MATRIX_FILE, &FitConfig::default(), Some(&truth)).unwrap();
    let r = fit.recovery.unwrap();
    assert!(r.corr_a > 0.8 && r.corr_theta > 0.8, "{r:?}");

    let capped = run_fit(&matrix, MATRIX_FILE, &FitConfig { max_em_iterations: 1, ..FitConfig::default() }, None).unwrap();
    assert!(!capped.log.converged);
}

#[test]
fn explain_end_to_end_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let pool = run_pool(&toy(), &PoolOptions::default()).unwrap();
    pool.write(dir.path()).unwrap();
    let fit = run_fit(&pool.matrix, MATRIX_FILE, &FitConfig::default(), None).unwrap();
    fit.write(dir.path()).unwrap();

    let paths = ExplainPaths::in_dir(dir.path());
    let report = run_explain(&paths, &ExplainOptions::default()).unwrap();
    write_report(&report, dir.path()).unwrap();
    let parsed = validate_report(&read_text(dir.path().join(REPORT_FILE)).unwrap()).unwrap();
    assert_eq!(parsed, report);
    assert_eq!(report.metadata.inputs["items"], "items.csv");
    assert!(report.metadata.settings.contains_key("pool"));

    let optimal = run_explain(
        &paths,
        &ExplainOptions {
            respondent: "optimal".into(),
            ..ExplainOptions::default()
        },
    )
    .unwrap();
    assert_eq!(optimal.model_diagnostics.n_unreliable_and_wrong, 0);
    assert!(optimal.model_diagnostics.no_errors);

    let missing = run_explain(
        &paths,
        &ExplainOptions {
            respondent: "svm".into(),
            ..ExplainOptions::default()
        },
    );
    let message = missing.unwrap_err().to_string();
    assert!(message.contains("rf_100") && message.contains("optimal"), "{message}");

    let items_text = read_text(dir.path().join(ITEMS_FILE)).unwrap();
    let (ids, items) = items_from_csv(&items_text).unwrap();
    assert_eq!(items_to_csv(&ids, &items), items_text);
    let abilities_text = read_text(dir.path().join(ABILITIES_FILE)).unwrap();
    let (ids, abilities) = abilities_from_csv(&abilities_text).unwrap();
    assert_eq!(abilities_to_csv(&ids, &abilities), abilities_text);
    let matrix_text = read_text(dir.path().join(MATRIX_FILE)).unwrap();
    assert_eq!(ResponseMatrix::parse_csv(&matrix_text).unwrap().to_csv_string(), matrix_text);
}

#[test]
fn report_validation_rejects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let pool = run_pool(&toy(), &PoolOptions::default()).unwrap();
    pool.write(dir.path()).unwrap();
    run_fit(&pool.matrix, MATRIX_FILE, &FitConfig::default(), None)
        .unwrap()
        .write(dir.path())
        .unwrap();
    let report = run_explain(&ExplainPaths::in_dir(dir.path()), &ExplainOptions::default()).unwrap();
    let json = report.to_json().unwrap();
    assert!(validate_report(&json).is_ok());

    let mut value: serde_json::Value = serde_json::from_str(&json).unwrap();
    let flag = value["verdicts"][0]["reliable"].as_bool().unwrap();
    value["verdicts"][0]["reliable"] = (!flag).into();
    assert!(validate_report(&value.to_string()).is_err());

    let mut value: serde_json::Value = serde_json::from_str(&json).unwrap();
    value.as_object_mut().unwrap().remove("plot_series");
    assert!(validate_report(&value.to_string()).is_err());

    let mut value: serde_json::Value = serde_json::from_str(&json).unwrap();
    value["schema_version"] = 99.into();
    assert!(validate_report(&value.to_string()).is_err());
}
