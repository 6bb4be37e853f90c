use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::correlation::{
    feature_correlations, percentile_profile, CorrelationFilter, CorrelationMethod, CorrelationTable,
};
use super::plots::{plot_series, PlotSeries};
use super::{model_diagnostics, summarize_items, verdicts, DatasetSummary, InstanceVerdict, ModelDiagnostics, Thresholds};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::irt::{icc, ItemParams};
use crate::response::responses_from_predictions;

pub const SCHEMA_VERSION: u32 = 1;

const TOP_LEVEL_KEYS: [&str; 7] = [
    "schema_version",
    "dataset_summary",
    "model_diagnostics",
    "verdicts",
    "correlations",
    "plot_series",
    "metadata",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tool_version: String,
    pub respondent: String,
    pub thresholds: Thresholds,
    pub correlation_method: CorrelationMethod,
    pub profile_percentile: f64,
    /// Input file names (base names only).
    pub inputs: BTreeMap<String, String>,
    /// Upstream configuration, seeds and fixed hyperparameters.
    pub settings: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub schema_version: u32,
    pub dataset_summary: DatasetSummary,
    pub model_diagnostics: ModelDiagnostics,
    pub verdicts: Vec<InstanceVerdict>,
    pub correlations: Vec<CorrelationTable>,
    pub plot_series: PlotSeries,
    pub metadata: ReportMetadata,
}

impl ExplanationReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub struct ExplainInputs<'a> {
    pub item_ids: &'a [String],
    pub items: &'a [ItemParams],
    pub respondent: &'a str,
    pub theta: f64,
    /// Test instances aligned with the items.
    pub test: &'a LabeledDataset,
    pub predictions: &'a [u8],
    /// The respondent's matrix row, when available; checked against the
    /// predictions.
    pub model_row: Option<&'a [u8]>,
    pub thresholds: Thresholds,
    pub correlation_method: CorrelationMethod,
    pub profile_percentile: f64,
    pub icc_pair: Option<(usize, usize)>,
    pub inputs: BTreeMap<String, String>,
    pub settings: BTreeMap<String, serde_json::Value>,
}

pub fn explain(inp: ExplainInputs<'_>) -> Result<ExplanationReport> {
    inp.thresholds.validate()?;
    if inp.test.len() != inp.items.len() {
        return Err(Error::Dimension {
            what: "test instances aligned with items",
            expected: inp.items.len(),
            found: inp.test.len(),
        });
    }
    let truth = inp.test.labels();
    let derived = responses_from_predictions(inp.predictions, truth)?;
    let model_row = inp.model_row.unwrap_or(&derived);

    let mut dataset_summary = summarize_items(inp.items, truth, &inp.thresholds)?;
    dataset_summary.feature_profiles = inp
        .test
        .feature_names()
        .iter()
        .map(|f| percentile_profile(inp.test, f, inp.profile_percentile))
        .collect::<Result<_>>()?;

    let diagnostics = model_diagnostics(
        model_row,
        inp.predictions,
        truth,
        inp.items,
        inp.theta,
        &inp.thresholds,
    )?;
    let verdicts = verdicts(inp.item_ids, inp.items, inp.theta, &inp.thresholds)?;

    let correlations = [
        CorrelationFilter::All,
        CorrelationFilter::ErrorsOnly(model_row),
        CorrelationFilter::NegativeDiscriminationOnly,
    ]
    .into_iter()
    .map(
        |filter| match feature_correlations(inp.test, inp.items, filter, inp.correlation_method) {
            Ok(t) => Ok(t),
            Err(e @ Error::InsufficientData { .. }) => Ok(CorrelationTable {
                filter: filter.name().to_string(),
                method: inp.correlation_method,
                n_instances: 0,
                rows: Vec::new(),
                skipped: Some(e.to_string()),
            }),
            Err(e) => Err(e),
        },
    )
    .collect::<Result<Vec<_>>>()?;

    let plot_series = plot_series(inp.item_ids, inp.items, inp.theta, truth, inp.icc_pair)?;

    Ok(ExplanationReport {
        schema_version: SCHEMA_VERSION,
        dataset_summary,
        model_diagnostics: diagnostics,
        verdicts,
        correlations,
        plot_series,
        metadata: ReportMetadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            respondent: inp.respondent.to_string(),
            thresholds: inp.thresholds,
            correlation_method: inp.correlation_method,
            profile_percentile: inp.profile_percentile,
            inputs: inp.inputs,
            settings: inp.settings,
        },
    })
}

fn schema_error(message: impl Into<String>) -> Error {
    Error::Format {
        context: "report".into(),
        message: message.into(),
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(schema_error(format!("{name} = {v} is outside [0, 1]")))
    }
}

fn check_mcc(name: &str, v: f64) -> Result<()> {
    if (-1.0 - 1e-12..=1.0 + 1e-12).contains(&v) {
        Ok(())
    } else {
        Err(schema_error(format!("{name} = {v} is outside [-1, 1]")))
    }
}

/// Parses a report and checks its schema and internal consistency.
pub fn validate_report(json: &str) -> Result<ExplanationReport> {
    let value: serde_json::Value = serde_json::from_str(json)?;
    let obj = value
        .as_object()
        .ok_or_else(|| schema_error("top level is not an object"))?;
    for key in TOP_LEVEL_KEYS {
        if !obj.contains_key(key) {
            return Err(schema_error(format!("missing key `{key}`")));
        }
    }
    if let Some(extra) = obj.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
        return Err(schema_error(format!("unexpected key `{extra}`")));
    }
    let report: ExplanationReport = serde_json::from_value(value)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(schema_error(format!(
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            report.schema_version
        )));
    }

    let s = &report.dataset_summary;
    for (name, v) in [
        ("pct_high_discrimination", s.pct_high_discrimination),
        ("pct_high_difficulty", s.pct_high_difficulty),
        ("pct_high_guessing", s.pct_high_guessing),
        ("pct_negative_discrimination", s.pct_negative_discrimination),
    ] {
        check_unit(name, v / 100.0)?;
    }
    if s.per_class.iter().map(|c| c.items).sum::<usize>() != s.total_items {
        return Err(schema_error("per-class item counts do not sum to total_items"));
    }
    if report.verdicts.len() != s.total_items {
        return Err(schema_error("verdict count differs from total_items"));
    }

    let d = &report.model_diagnostics;
    check_unit("accuracy_total", d.accuracy_total)?;
    check_unit("error_overlap_negative_discrimination", d.error_overlap_negative_discrimination)?;
    check_mcc("mcc_total", d.mcc_total)?;
    if let Some(v) = d.accuracy_wng {
        check_unit("accuracy_wng", v)?;
    }
    if let Some(v) = d.mcc_wng {
        check_mcc("mcc_wng", v)?;
    }

    let theta = d.ability;
    let cutoff = report.metadata.thresholds.reliability_cutoff;
    for v in &report.verdicts {
        let p = icc(theta, &v.item);
        if (p - v.success_probability).abs() > 1e-12 {
            return Err(schema_error(format!(
                "verdict {}: probability {} does not match recomputed {p}",
                v.item_id, v.success_probability
            )));
        }
        if v.reliable != (v.success_probability >= cutoff) {
            return Err(schema_error(format!(
                "verdict {}: reliable flag inconsistent with cutoff {cutoff}",
                v.item_id
            )));
        }
    }
    for h in &report.plot_series.histograms {
        for series in &h.series {
            let expected = s
                .per_class
                .iter()
                .find(|c| c.class == series.class)
                .map_or(0, |c| c.items);
            if series.counts.iter().sum::<usize>() != expected {
                return Err(schema_error(format!(
                    "{} histogram for class {} does not sum to the class size",
                    h.parameter, series.class
                )));
            }
        }
    }
    Ok(report)
}
