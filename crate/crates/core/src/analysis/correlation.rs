use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::irt::ItemParams;
use crate::stats::{pearson, percentile, spearman};

/// A profile whose fraction below half-max reaches this value is marked as
/// being in the outlier regime.
pub const OUTLIER_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    #[default]
    Pearson,
    Spearman,
}

impl CorrelationMethod {
    fn apply(self, x: &[f64], y: &[f64]) -> Option<f64> {
        match self {
            CorrelationMethod::Pearson => pearson(x, y),
            CorrelationMethod::Spearman => spearman(x, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationFilter<'a> {
    All,
    /// Instances the model answered wrongly (response 0).
    ErrorsOnly(&'a [u8]),
    NegativeDiscriminationOnly,
}

impl CorrelationFilter<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            CorrelationFilter::All => "all",
            CorrelationFilter::ErrorsOnly(_) => "errors_only",
            CorrelationFilter::NegativeDiscriminationOnly => "negative_discrimination_only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCorrelation {
    pub feature: String,
    pub corr_a: f64,
    pub corr_b: f64,
    pub corr_c: f64,
    /// Correlation with the indicator `1[a < 0]`.
    pub corr_negative_a: f64,
    /// The feature is constant on the subset; its correlations are set to 0.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub filter: String,
    pub method: CorrelationMethod,
    pub n_instances: usize,
    pub rows: Vec<FeatureCorrelation>,
    /// Why the table is empty, when it is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

/// Correlation of each feature column with `a`, `b`, `c` and `1[a < 0]` over
/// the filtered instances. Undefined correlations (constant vectors) are 0.
pub fn feature_correlations(
    test: &LabeledDataset,
    items: &[ItemParams],
    filter: CorrelationFilter<'_>,
    method: CorrelationMethod,
) -> Result<CorrelationTable> {
    if test.len() != items.len() {
        return Err(Error::Dimension {
            what: "test rows aligned with items",
            expected: items.len(),
            found: test.len(),
        });
    }
    let keep: Vec<usize> = match filter {
        CorrelationFilter::All => (0..items.len()).collect(),
        CorrelationFilter::ErrorsOnly(row) => {
            if row.len() != items.len() {
                return Err(Error::Dimension {
                    what: "model responses aligned with items",
                    expected: items.len(),
                    found: row.len(),
                });
            }
            (0..items.len()).filter(|&i| row[i] == 0).collect()
        }
        CorrelationFilter::NegativeDiscriminationOnly => (0..items.len()).filter(|&i| items[i].a < 0.0).collect(),
    };
    if keep.len() < 3 {
        return Err(Error::InsufficientData {
            what: "instances for correlation",
            needed: 3,
            found: keep.len(),
        });
    }
    let pick = |f: fn(&ItemParams) -> f64| keep.iter().map(|&i| f(&items[i])).collect::<Vec<f64>>();
    let a = pick(|p| p.a);
    let b = pick(|p| p.b);
    let c = pick(|p| p.c);
    let neg = pick(|p| if p.a < 0.0 { 1.0 } else { 0.0 });
    let rows = test
        .feature_names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let x: Vec<f64> = keep.iter().map(|&i| test.row(i)[j]).collect();
            let constant = x.iter().all(|&v| v == x[0]);
            let corr = |y: &[f64]| method.apply(&x, y).unwrap_or(0.0);
            FeatureCorrelation {
                feature: name.clone(),
                corr_a: corr(&a),
                corr_b: corr(&b),
                corr_c: corr(&c),
                corr_negative_a: corr(&neg),
                constant,
            }
        })
        .collect();
    Ok(CorrelationTable {
        filter: filter.name().to_string(),
        method,
        n_instances: keep.len(),
        rows,
        skipped: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassFraction {
    pub class: u8,
    pub count: usize,
    pub fraction_below_half_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileProfile {
    pub feature: String,
    pub percentile: f64,
    pub value: f64,
    pub max: f64,
    pub half_max: f64,
    pub fraction_below_half_max: f64,
    pub per_class: Vec<ClassFraction>,
    pub outlier_regime: bool,
}

/// Empirical percentile of a feature plus the share of instances strictly
/// below half of the feature maximum. A constant feature has no instance
/// below half-max.
pub fn percentile_profile(test: &LabeledDataset, feature: &str, p: f64) -> Result<PercentileProfile> {
    if !(p > 0.0 && p < 100.0) {
        return Err(Error::invalid(format!("percentile {p} is outside (0, 100)")));
    }
    if test.is_empty() {
        return Err(Error::InsufficientData {
            what: "instances for percentile profile",
            needed: 1,
            found: 0,
        });
    }
    let j = test
        .feature_index(feature)
        .ok_or_else(|| Error::MissingColumn(feature.to_string()))?;
    let x = test.column(j);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let half_max = max / 2.0;
    let below = |v: f64| min < max && v < half_max;
    let fraction = |idx: &mut dyn Iterator<Item = usize>| {
        let (mut n, mut k) = (0usize, 0usize);
        for i in idx {
            n += 1;
            k += usize::from(below(x[i]));
        }
        (n, if n == 0 { 0.0 } else { k as f64 / n as f64 })
    };
    let (_, overall) = fraction(&mut (0..x.len()));
    let per_class = [0u8, 1]
        .into_iter()
        .filter_map(|class| {
            let (count, f) = fraction(&mut (0..x.len()).filter(|&i| test.labels()[i] == class));
            (count > 0).then_some(ClassFraction {
                class,
                count,
                fraction_below_half_max: f,
            })
        })
        .collect();
    Ok(PercentileProfile {
        feature: feature.to_string(),
        percentile: p,
        value: percentile(&x, p),
        max,
        half_max,
        fraction_below_half_max: overall,
        per_class,
        outlier_regime: overall >= OUTLIER_FRACTION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(columns: &[(&str, Vec<f64>)], labels: Vec<u8>) -> LabeledDataset {
        let names = columns.iter().map(|(n, _)| n.to_string()).collect();
        let rows = (0..labels.len())
            .map(|i| columns.iter().map(|(_, c)| c[i]).collect())
            .collect();
        LabeledDataset::new("t", names, rows, labels).unwrap()
    }

    #[test]
    fn self_correlation_and_constant() {
        let b = [0.3, -1.0, 2.0, 0.5, 1.5];
        let items: Vec<ItemParams> = b
            .iter()
            .enumerate()
            .map(|(i, &b)| ItemParams {
                a: i as f64 - 2.0,
                b,
                c: 0.1,
            })
            .collect();
        let ds = dataset(
            &[
                ("same", b.to_vec()),
                ("neg", b.iter().map(|v| -v).collect()),
                ("flat", vec![2.0; 5]),
            ],
            vec![0, 1, 0, 1, 0],
        );
        let t = feature_correlations(&ds, &items, CorrelationFilter::All, CorrelationMethod::Pearson).unwrap();
        assert!((t.rows[0].corr_b - 1.0).abs() < 1e-12);
        assert!((t.rows[1].corr_b + 1.0).abs() < 1e-12);
        assert!(t.rows[2].constant);
        assert_eq!(t.rows[2].corr_a, 0.0);
        // c is constant across items.
        assert_eq!(t.rows[0].corr_c, 0.0);

        let row = [0, 1, 1, 1, 0];
        let err = feature_correlations(&ds, &items, CorrelationFilter::ErrorsOnly(&row), CorrelationMethod::Pearson);
        assert!(matches!(err, Err(Error::InsufficientData { found: 2, .. })));
    }

    #[test]
    fn percentile_profile_examples() {
        let ten: Vec<f64> = (0..10).map(f64::from).collect();
        let labels = vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let ds = dataset(&[("x", ten), ("k", vec![3.0; 10])], labels.clone());
        let p = percentile_profile(&ds, "x", 90.0).unwrap();
        assert_eq!(p.half_max, 4.5);
        assert_eq!(p.fraction_below_half_max, 0.5);
        assert!((p.value - 8.1).abs() < 1e-12);
        assert_eq!(percentile_profile(&ds, "k", 50.0).unwrap().fraction_below_half_max, 0.0);

        let mut spiky: Vec<f64> = (1..=9).map(f64::from).collect();
        spiky.push(100.0);
        let ds = dataset(&[("s", spiky)], labels);
        let p = percentile_profile(&ds, "s", 90.0).unwrap();
        assert!(p.fraction_below_half_max >= 0.9);
        assert!(p.outlier_regime);
        assert!(percentile_profile(&ds, "s", 100.0).is_err());
        assert!(matches!(percentile_profile(&ds, "nope", 50.0), Err(Error::MissingColumn(_))));
    }
}
