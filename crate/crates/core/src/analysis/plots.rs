use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irt::{icc, ItemParams};

pub const HISTOGRAM_BIN_WIDTH: f64 = 0.25;
pub const ICC_GRID_POINTS: usize = 201;

const A_RANGE: (f64, f64) = (-4.0, 4.0);
const B_RANGE: (f64, f64) = (-4.0, 4.0);
const C_RANGE: (f64, f64) = (0.0, 0.5);
const ICC_RANGE: (f64, f64) = (-4.0, 4.0);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassHistogram {
    pub class: u8,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub parameter: String,
    pub bin_width: f64,
    /// Left edges of the bins; the last bin is closed on the right.
    pub bin_starts: Vec<f64>,
    pub series: Vec<ClassHistogram>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub item: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub class: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityPoint {
    pub rank: usize,
    pub item: String,
    pub a: f64,
    pub probability: f64,
    pub class: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IccCurve {
    pub item: String,
    pub params: ItemParams,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IccPair {
    pub theta_grid: Vec<f64>,
    pub curves: Vec<IccCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub histograms: Vec<Histogram>,
    pub scatter: Vec<ScatterPoint>,
    /// Success probability at the model's ability, by discrimination
    /// descending (ties by item id).
    pub probability_by_discrimination: Vec<ProbabilityPoint>,
    pub icc_pair: IccPair,
}

fn histogram(name: &str, range: (f64, f64), values: &[f64], labels: &[u8]) -> Histogram {
    let bins = ((range.1 - range.0) / HISTOGRAM_BIN_WIDTH).round() as usize;
    let bin_starts = (0..bins)
        .map(|k| range.0 + HISTOGRAM_BIN_WIDTH * k as f64)
        .collect();
    let series = [0u8, 1]
        .into_iter()
        .filter(|class| labels.contains(class))
        .map(|class| {
            let mut counts = vec![0usize; bins];
            for (v, _) in values.iter().zip(labels).filter(|(_, &l)| l == class) {
                let k = ((v - range.0) / HISTOGRAM_BIN_WIDTH).floor();
                let k = if k.is_nan() { 0.0 } else { k.clamp(0.0, (bins - 1) as f64) };
                counts[k as usize] += 1;
            }
            ClassHistogram { class, counts }
        })
        .collect();
    Histogram {
        parameter: name.to_string(),
        bin_width: HISTOGRAM_BIN_WIDTH,
        bin_starts,
        series,
    }
}

pub fn icc_grid() -> Vec<f64> {
    let step = (ICC_RANGE.1 - ICC_RANGE.0) / (ICC_GRID_POINTS - 1) as f64;
    (0..ICC_GRID_POINTS)
        .map(|k| ICC_RANGE.0 + step * k as f64)
        .collect()
}

/// Index of the max-`a` and min-`a` items (first occurrence on ties).
pub fn default_icc_pair(items: &[ItemParams]) -> Option<(usize, usize)> {
    if items.is_empty() {
        return None;
    }
    let mut hi = 0;
    let mut lo = 0;
    for (i, it) in items.iter().enumerate() {
        if it.a > items[hi].a {
            hi = i;
        }
        if it.a < items[lo].a {
            lo = i;
        }
    }
    Some((hi, lo))
}

pub fn plot_series(
    item_ids: &[String],
    items: &[ItemParams],
    theta: f64,
    labels: &[u8],
    icc_pair: Option<(usize, usize)>,
) -> Result<PlotSeries> {
    let n = items.len();
    for (what, len) in [("item ids", item_ids.len()), ("labels", labels.len())] {
        if len != n {
            return Err(Error::Dimension {
                what,
                expected: n,
                found: len,
            });
        }
    }
    let pair = icc_pair
        .or(default_icc_pair(items))
        .ok_or(Error::InsufficientData {
            what: "items for plot series",
            needed: 1,
            found: 0,
        })?;
    if pair.0 >= n || pair.1 >= n {
        return Err(Error::invalid(format!("ICC pair {pair:?} out of range for {n} items")));
    }

    let column = |f: fn(&ItemParams) -> f64| items.iter().map(f).collect::<Vec<f64>>();
    let histograms = vec![
        histogram("discrimination", A_RANGE, &column(|p| p.a), labels),
        histogram("difficulty", B_RANGE, &column(|p| p.b), labels),
        histogram("guessing", C_RANGE, &column(|p| p.c), labels),
    ];

    let scatter = (0..n)
        .map(|i| ScatterPoint {
            item: item_ids[i].clone(),
            a: items[i].a,
            b: items[i].b,
            c: items[i].c,
            class: labels[i],
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        items[j]
            .a
            .total_cmp(&items[i].a)
            .then_with(|| item_ids[i].cmp(&item_ids[j]))
    });
    let probability_by_discrimination = order
        .iter()
        .enumerate()
        .map(|(rank, &i)| ProbabilityPoint {
            rank,
            item: item_ids[i].clone(),
            a: items[i].a,
            probability: icc(theta, &items[i]),
            class: labels[i],
        })
        .collect();

    let theta_grid = icc_grid();
    let curve = |i: usize| IccCurve {
        item: item_ids[i].clone(),
        params: items[i],
        probabilities: theta_grid.iter().map(|&t| icc(t, &items[i])).collect(),
    };
    let icc_pair = IccPair {
        curves: vec![curve(pair.0), curve(pair.1)],
        theta_grid,
    };

    Ok(PlotSeries {
        histograms,
        scatter,
        probability_by_discrimination,
        icc_pair,
    })
}
