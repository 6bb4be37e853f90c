//! Labeled binary datasets and the stratified train/test split.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Dense numeric features with binary class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    name: String,
    feature_names: Vec<String>,
    /// Row-major, `n_instances * n_features`.
    features: Vec<f64>,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(
        name: impl Into<String>,
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Dimension {
                what: "dataset labels",
                expected: rows.len(),
                found: labels.len(),
            });
        }
        let width = feature_names.len();
        let mut features = Vec::with_capacity(rows.len() * width);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Dimension {
                    what: "dataset row width",
                    expected: width,
                    found: row.len(),
                });
            }
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "non-finite feature value at row {r}, column `{}`",
                    feature_names[c]
                )));
            }
            features.extend_from_slice(row);
        }
        let ds = Self {
            name: name.into(),
            feature_names,
            features,
            labels,
        };
        ds.check_labels()?;
        Ok(ds)
    }

    fn check_labels(&self) -> Result<()> {
        if let Some(bad) = self.labels.iter().find(|&&l| l > 1) {
            return Err(Error::Label(format!("label {bad} is not 0 or 1")));
        }
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        if ones == 0 || ones == self.labels.len() {
            return Err(Error::Label(
                "exactly two distinct label values are required".into(),
            ));
        }
        Ok(())
    }

    /// Reads a dataset CSV: a header of feature names plus `label_col`,
    /// numeric cells only, labels 0 or 1.
    pub fn read_csv(path: impl AsRef<Path>, label_col: &str) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse_csv(&name, &text, label_col)
    }

    pub fn parse_csv(name: &str, text: &str, label_col: &str) -> Result<Self> {
        let context = format!("dataset `{name}`");
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Format {
                context: context.clone(),
                message: e.to_string(),
            })?
            .clone();
        let label_idx = headers
            .iter()
            .position(|h| h == label_col)
            .ok_or_else(|| Error::MissingColumn(label_col.to_string()))?;
        let feature_names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(_, h)| h.to_string())
            .collect();

        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let line = r + 2;
            let record = record.map_err(|e| Error::Parse {
                context: context.clone(),
                line,
                column: 0,
                message: e.to_string(),
            })?;
            let mut row = Vec::with_capacity(feature_names.len());
            for (c, cell) in record.iter().enumerate() {
                let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                    context: context.clone(),
                    line,
                    column: c + 1,
                    message: format!("`{cell}` is not a number (column `{}`)", &headers[c]),
                })?;
                if !value.is_finite() {
                    return Err(Error::Parse {
                        context: context.clone(),
                        line,
                        column: c + 1,
                        message: format!("non-finite value in column `{}`", &headers[c]),
                    });
                }
                if c == label_idx {
                    let label = match value {
                        0.0 => 0,
                        1.0 => 1,
                        _ => {
                            return Err(Error::Parse {
                                context: context.clone(),
                                line,
                                column: c + 1,
                                message: format!("label `{cell}` is not 0 or 1"),
                            })
                        }
                    };
                    labels.push(label);
                } else {
                    row.push(value);
                }
            }
            rows.push(row);
        }
        Self::new(name, feature_names, rows, labels)
    }

    /// Serializes with the label column appended last. Values use the
    /// shortest round-trip representation.
    pub fn to_csv_string(&self, label_col: &str) -> String {
        let mut out = String::new();
        for name in &self.feature_names {
            out.push_str(name);
            out.push(',');
        }
        out.push_str(label_col);
        out.push('\n');
        for i in 0..self.len() {
            for v in self.row(i) {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{}", self.labels[i]);
        }
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_features();
        &self.features[i * d..(i + 1) * d]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.row(i)[j]).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.len() - ones, ones]
    }

    /// Majority class; ties go to class 0.
    pub fn majority_class(&self) -> u8 {
        let [zeros, ones] = self.class_counts();
        u8::from(ones > zeros)
    }

    /// Builds a sub-dataset from row indices (in the given order).
    pub fn subset(&self, name: impl Into<String>, indices: &[usize]) -> Result<Self> {
        let rows = indices.iter().map(|&i| self.row(i).to_vec()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(name, self.feature_names.clone(), rows, labels)
    }
}

/// Train/test partition of a dataset. Index vectors refer to rows of the
/// source dataset and are sorted ascending; the split datasets keep that order.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub train_fraction: f64,
}

/// Per-class train counts: `floor(frac * n_k)` per class, with the remaining
/// `round(frac * n) - sum(floors)` instances handed to the classes with the
/// largest fractional parts (ties to the lower class index).
pub fn stratified_train_counts(class_counts: &[usize], train_fraction: f64) -> Vec<usize> {
    let total: usize = class_counts.iter().sum();
    let ideal: Vec<f64> = class_counts
        .iter()
        .map(|&n| train_fraction * n as f64)
        .collect();
    // Guard against products like 0.57 * 100 = 56.999999999999993.
    let mut counts: Vec<usize> = ideal.iter().map(|x| (x + 1e-9).floor() as usize).collect();
    let target = (train_fraction * total as f64 + 1e-9).round() as usize;
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..class_counts.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = ideal[i] - counts[i] as f64;
        let fj = ideal[j] - counts[j] as f64;
        fj.total_cmp(&fi).then(i.cmp(&j))
    });
    for &k in order.iter().take(target.saturating_sub(assigned)) {
        if counts[k] < class_counts[k] {
            counts[k] += 1;
        }
    }
    counts
}

pub fn stratified_split(
    dataset: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<SplitPair> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in dataset.labels().iter().enumerate() {
        if l > 1 {
            return Err(Error::Label(format!("label {l} is not 0 or 1")));
        }
        by_class[usize::from(l)].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::DegenerateClass {
                class: class as u8,
                count: members.len(),
            });
        }
    }
    let sizes = [by_class[0].len(), by_class[1].len()];
    let train_counts = stratified_train_counts(&sizes, train_fraction);
    for class in 0..2 {
        if train_counts[class] == 0 {
            return Err(Error::EmptySplitSide {
                class: class as u8,
                side: "train",
            });
        }
        if train_counts[class] == sizes[class] {
            return Err(Error::EmptySplitSide {
                class: class as u8,
                side: "test",
            });
        }
    }

    let mut rng = rng_from_seed(seed);
    let mut train_indices = Vec::new();
    let mut test_indices = Vec::new();
    for (class, members) in by_class.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        train_indices.extend_from_slice(&members[..train_counts[class]]);
        test_indices.extend_from_slice(&members[train_counts[class]..]);
    }
    train_indices.sort_unstable();
    test_indices.sort_unstable();

    Ok(SplitPair {
        train: dataset.subset(format!("{}-train", dataset.name()), &train_indices)?,
        test: dataset.subset(format!("{}-test", dataset.name()), &test_indices)?,
        train_indices,
        test_indices,
        seed,
        train_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset_with_counts(zeros: usize, ones: usize) -> LabeledDataset {
        let n = zeros + ones;
        let rows = (0..n).map(|i| vec![i as f64]).collect();
        let labels = (0..n).map(|i| u8::from(i >= zeros)).collect();
        LabeledDataset::new("t", vec!["x".into()], rows, labels).unwrap()
    }

    /// Enumerates every per-class allocation summing to the rounded target
    /// and picks the one with the smallest worst-case deviation from
    /// `frac * n_k` (ties toward class 0). Integer arithmetic in tenths.
    fn brute_force_counts(sizes: &[usize], tenths: usize) -> Vec<usize> {
        let total: usize = sizes.iter().sum();
        let target = (tenths * total + 5) / 10;
        let mut best: Option<(Vec<usize>, usize)> = None;
        for t0 in (0..=sizes[0]).rev() {
            for t1 in 0..=sizes[1] {
                if t0 + t1 != target {
                    continue;
                }
                let dev = [t0, t1]
                    .iter()
                    .zip(sizes)
                    .map(|(&t, &n)| (10 * t).abs_diff(tenths * n))
                    .max()
                    .unwrap();
                if best.as_ref().is_none_or(|(_, d)| dev < *d) {
                    best = Some((vec![t0, t1], dev));
                }
            }
        }
        best.unwrap().0
    }

    #[test]
    fn rounding_example_six_four() {
        assert_eq!(stratified_train_counts(&[6, 4], 0.7), vec![4, 3]);
        assert_eq!(brute_force_counts(&[6, 4], 7), vec![4, 3]);
        let split = stratified_split(&dataset_with_counts(6, 4), 0.7, 1).unwrap();
        assert_eq!(split.train.class_counts(), [4, 3]);
        assert_eq!(split.test.class_counts(), [2, 1]);
    }

    #[test]
    fn rounding_matches_enumeration() {
        for (z, o) in [(6, 4), (10, 7), (33, 12), (700, 300), (93, 7), (5, 5)] {
            assert_eq!(
                stratified_train_counts(&[z, o], 0.7),
                brute_force_counts(&[z, o], 7),
                "sizes {z}/{o}"
            );
        }
    }

    #[test]
    fn empty_test_side_is_an_error() {
        let err = stratified_split(&dataset_with_counts(2, 2), 0.9, 0).unwrap_err();
        assert!(matches!(err, Error::EmptySplitSide { side: "test", .. }));
    }

    #[test]
    fn class_with_one_instance_is_degenerate() {
        let rows = (0..4).map(|i| vec![i as f64]).collect();
        let ds = LabeledDataset::new("t", vec!["x".into()], rows, vec![0, 0, 0, 1]).unwrap();
        assert!(matches!(
            stratified_split(&ds, 0.7, 0),
            Err(Error::DegenerateClass { class: 1, count: 1 })
        ));
    }

    #[test]
    fn split_is_deterministic_partition() {
        let ds = dataset_with_counts(30, 17);
        let a = stratified_split(&ds, 0.7, 42).unwrap();
        let b = stratified_split(&ds, 0.7, 42).unwrap();
        assert_eq!(a.train_indices, b.train_indices);
        let mut all: Vec<usize> = a.train_indices.iter().chain(&a.test_indices).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..47).collect::<Vec<_>>());
        let c = stratified_split(&ds, 0.7, 43).unwrap();
        assert_ne!(a.train_indices, c.train_indices);
    }

    #[test]
    fn rejects_non_binary_or_single_class() {
        let rows = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            LabeledDataset::new("t", vec!["x".into()], rows.clone(), vec![0, 2]),
            Err(Error::Label(_))
        ));
        assert!(matches!(
            LabeledDataset::new("t", vec!["x".into()], rows, vec![1, 1]),
            Err(Error::Label(_))
        ));
    }

    #[test]
    fn csv_parse_and_errors() {
        let ds = LabeledDataset::parse_csv("d", "x,y,label\n1,2,0\n3,4.5,1\n", "label").unwrap();
        assert_eq!(ds.row(1), &[3.0, 4.5]);
        assert_eq!(ds.labels(), &[0, 1]);
        let round = LabeledDataset::parse_csv("d", &ds.to_csv_string("label"), "label").unwrap();
        assert_eq!(round, ds);

        let missing = LabeledDataset::parse_csv("d", "x,y\n1,2\n", "class").unwrap_err();
        assert!(missing.to_string().contains("class"));

        let bad = LabeledDataset::parse_csv("d", "x,label\n1,0\nfoo,1\n", "label").unwrap_err();
        match bad {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (3, 1)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(LabeledDataset::parse_csv("d", "x,label\nNaN,0\n1,1\n", "label").is_err());
    }
}
