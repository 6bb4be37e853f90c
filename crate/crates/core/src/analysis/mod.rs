//! Explainability outputs derived from fitted item parameters: threshold
//! summaries, per-instance reliability verdicts, filtered metrics, error
//! overlap, feature correlations and plot series.

mod correlation;
mod plots;
mod report;

use serde::{Deserialize, Serialize};

pub use correlation::{
    feature_correlations, percentile_profile, ClassFraction, CorrelationFilter, CorrelationMethod,
    CorrelationTable, FeatureCorrelation, PercentileProfile, OUTLIER_FRACTION,
};
pub use plots::{
    plot_series, ClassHistogram, Histogram, IccCurve, IccPair, PlotSeries, ProbabilityPoint, ScatterPoint,
    HISTOGRAM_BIN_WIDTH, ICC_GRID_POINTS,
};
pub use report::{explain, validate_report, ExplainInputs, ExplanationReport, ReportMetadata, SCHEMA_VERSION};

use crate::error::{Error, Result};
use crate::irt::{icc, ItemParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub discrimination_high: f64,
    pub difficulty_high: f64,
    pub guessing_high: f64,
    pub reliability_cutoff: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            discrimination_high: 0.0,
            difficulty_high: 0.0,
            guessing_high: 0.2,
            reliability_cutoff: 0.5,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.discrimination_high.is_finite() && self.difficulty_high.is_finite()) {
            return Err(Error::invalid("thresholds must be finite"));
        }
        if !(0.0..=1.0).contains(&self.guessing_high) {
            return Err(Error::invalid(format!(
                "guessing threshold {} is outside [0, 1]",
                self.guessing_high
            )));
        }
        if !(self.reliability_cutoff > 0.0 && self.reliability_cutoff < 1.0) {
            return Err(Error::invalid(format!(
                "reliability cutoff {} is outside (0, 1)",
                self.reliability_cutoff
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFlagCounts {
    pub class: u8,
    pub items: usize,
    pub high_discrimination: usize,
    pub high_difficulty: usize,
    pub high_guessing: usize,
    pub negative_discrimination: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub total_items: usize,
    pub pct_high_discrimination: f64,
    pub pct_high_difficulty: f64,
    pub pct_high_guessing: f64,
    pub pct_negative_discrimination: f64,
    pub per_class: Vec<ClassFlagCounts>,
    #[serde(default)]
    pub feature_profiles: Vec<PercentileProfile>,
}

fn percent(count: usize, total: usize) -> f64 {
    100.0 * count as f64 / total as f64
}

/// Share of items above each threshold (`a > .discrimination_high`,
/// `b > .difficulty_high`, `c >= .guessing_high`), overall and per class.
pub fn summarize_items(items: &[ItemParams], labels: &[u8], thresholds: &Thresholds) -> Result<DatasetSummary> {
    if items.is_empty() {
        return Err(Error::InsufficientData {
            what: "items to summarize",
            needed: 1,
            found: 0,
        });
    }
    if labels.len() != items.len() {
        return Err(Error::Dimension {
            what: "labels aligned with items",
            expected: items.len(),
            found: labels.len(),
        });
    }
    let mut classes = [0u8, 1].map(|class| ClassFlagCounts {
        class,
        items: 0,
        high_discrimination: 0,
        high_difficulty: 0,
        high_guessing: 0,
        negative_discrimination: 0,
    });
    for (it, &label) in items.iter().zip(labels) {
        let k = classes
            .get_mut(usize::from(label))
            .ok_or_else(|| Error::Label(format!("label {label} is not 0 or 1")))?;
        k.items += 1;
        k.high_discrimination += usize::from(it.a > thresholds.discrimination_high);
        k.high_difficulty += usize::from(it.b > thresholds.difficulty_high);
        k.high_guessing += usize::from(it.c >= thresholds.guessing_high);
        k.negative_discrimination += usize::from(it.a < 0.0);
    }
    let n = items.len();
    let total = |f: fn(&ClassFlagCounts) -> usize| classes.iter().map(f).sum::<usize>();
    Ok(DatasetSummary {
        total_items: n,
        pct_high_discrimination: percent(total(|c| c.high_discrimination), n),
        pct_high_difficulty: percent(total(|c| c.high_difficulty), n),
        pct_high_guessing: percent(total(|c| c.high_guessing), n),
        pct_negative_discrimination: percent(total(|c| c.negative_discrimination), n),
        per_class: classes.into_iter().filter(|c| c.items > 0).collect(),
        feature_profiles: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictFlag {
    NegativeDiscrimination,
    DifficultBeyondAbility,
    HighGuessing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceVerdict {
    pub item_id: String,
    pub success_probability: f64,
    pub reliable: bool,
    pub flags: Vec<VerdictFlag>,
    pub item: ItemParams,
}

pub fn verdict(item_id: &str, item: &ItemParams, theta: f64, thresholds: &Thresholds) -> InstanceVerdict {
    let p = icc(theta, item);
    let mut flags = Vec::new();
    if item.a < 0.0 {
        flags.push(VerdictFlag::NegativeDiscrimination);
    }
    if item.b > theta {
        flags.push(VerdictFlag::DifficultBeyondAbility);
    }
    if item.c >= thresholds.guessing_high {
        flags.push(VerdictFlag::HighGuessing);
    }
    InstanceVerdict {
        item_id: item_id.to_string(),
        success_probability: p,
        reliable: p >= thresholds.reliability_cutoff,
        flags,
        item: *item,
    }
}

pub fn verdicts(
    item_ids: &[String],
    items: &[ItemParams],
    theta: f64,
    thresholds: &Thresholds,
) -> Result<Vec<InstanceVerdict>> {
    if !theta.is_finite() {
        return Err(Error::invalid(format!("ability {theta} is not finite")));
    }
    if item_ids.len() != items.len() {
        return Err(Error::Dimension {
            what: "item ids aligned with items",
            expected: items.len(),
            found: item_ids.len(),
        });
    }
    Ok(item_ids
        .iter()
        .zip(items)
        .map(|(id, it)| verdict(id, it, theta, thresholds))
        .collect())
}

/// Matthews correlation coefficient with class 1 as positive. Returns 0
/// when any marginal total is zero.
pub fn mcc(tp: u64, tn: u64, fp: u64, fn_: u64) -> Result<f64> {
    if tp + tn + fp + fn_ == 0 {
        return Err(Error::invalid("MCC of an empty confusion matrix"));
    }
    let (tp, tn, fp, fn_) = (tp as f64, tn as f64, fp as f64, fn_ as f64);
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((tp * tn - fp * fn_) / denom.sqrt())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn from_predictions<'a>(pairs: impl IntoIterator<Item = (&'a u8, &'a u8)>) -> Self {
        let mut c = Self::default();
        for (&p, &t) in pairs {
            match (p, t) {
                (1, 1) => c.tp += 1,
                (0, 0) => c.tn += 1,
                (1, _) => c.fp += 1,
                _ => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> Option<f64> {
        (self.total() > 0).then(|| (self.tp + self.tn) as f64 / self.total() as f64)
    }

    pub fn mcc(&self) -> Option<f64> {
        mcc(self.tp, self.tn, self.fp, self.fn_).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDiagnostics {
    pub ability: f64,
    pub n_items: usize,
    pub accuracy_total: f64,
    pub mcc_total: f64,
    /// Items with `a >= 0`.
    pub n_items_wng: usize,
    pub accuracy_wng: Option<f64>,
    pub mcc_wng: Option<f64>,
    pub n_errors: usize,
    pub n_errors_negative_discrimination: usize,
    /// Fraction of the model's errors that fall on items with `a < 0`;
    /// 0 when the model makes no errors (see `no_errors`).
    pub error_overlap_negative_discrimination: f64,
    pub no_errors: bool,
    pub n_unreliable: usize,
    pub n_unreliable_and_wrong: usize,
}

pub fn model_diagnostics(
    model_row: &[u8],
    predictions: &[u8],
    truth: &[u8],
    items: &[ItemParams],
    theta: f64,
    thresholds: &Thresholds,
) -> Result<ModelDiagnostics> {
    let n = items.len();
    for (what, len) in [
        ("model responses", model_row.len()),
        ("predictions", predictions.len()),
        ("truth labels", truth.len()),
    ] {
        if len != n {
            return Err(Error::Dimension {
                what,
                expected: n,
                found: len,
            });
        }
    }
    if n == 0 {
        return Err(Error::InsufficientData {
            what: "items for diagnostics",
            needed: 1,
            found: 0,
        });
    }
    if let Some(i) = (0..n).find(|&i| model_row[i] != u8::from(predictions[i] == truth[i])) {
        return Err(Error::invalid(format!(
            "response {} for item {i} disagrees with prediction {} against label {}",
            model_row[i], predictions[i], truth[i]
        )));
    }
    let all = Confusion::from_predictions(predictions.iter().zip(truth));
    let wng_idx: Vec<usize> = (0..n).filter(|&i| items[i].a >= 0.0).collect();
    let wng = Confusion::from_predictions(wng_idx.iter().map(|&i| (&predictions[i], &truth[i])));
    let n_errors = model_row.iter().filter(|&&r| r == 0).count();
    let n_errors_neg = (0..n).filter(|&i| model_row[i] == 0 && items[i].a < 0.0).count();
    let unreliable: Vec<bool> = items
        .iter()
        .map(|it| icc(theta, it) < thresholds.reliability_cutoff)
        .collect();
    Ok(ModelDiagnostics {
        ability: theta,
        n_items: n,
        accuracy_total: all.accuracy().unwrap_or(0.0),
        mcc_total: all.mcc().unwrap_or(0.0),
        n_items_wng: wng_idx.len(),
        accuracy_wng: wng.accuracy(),
        mcc_wng: wng.mcc(),
        n_errors,
        n_errors_negative_discrimination: n_errors_neg,
        error_overlap_negative_discrimination: if n_errors == 0 {
            0.0
        } else {
            n_errors_neg as f64 / n_errors as f64
        },
        no_errors: n_errors == 0,
        n_unreliable: unreliable.iter().filter(|&&u| u).count(),
        n_unreliable_and_wrong: (0..n).filter(|&i| unreliable[i] && model_row[i] == 0).count(),
    })
}
