//! The dichotomous respondent-by-item response matrix.
//!
//! Rows are respondents (classifiers), columns are items (test instances) and
//! each cell records whether the respondent classified the item correctly.
//!
//! CSV layout: the first header cell is `respondent`, the remaining header
//! cells are item ids; each following line holds a respondent id and its
//! `0`/`1` cells. Comma separated, LF line endings.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

pub const ARTIFICIAL_IDS: [&str; 7] = [
    "optimal", "pessimal", "majority", "minority", "rand1", "rand2", "rand3",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseMatrix {
    respondent_ids: Vec<String>,
    item_ids: Vec<String>,
    /// Row-major, `n_respondents * n_items`, each cell 0 or 1.
    cells: Vec<u8>,
}

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

impl ResponseMatrix {
    pub fn new(respondent_ids: Vec<String>, item_ids: Vec<String>, cells: Vec<u8>) -> Result<Self> {
        check_unique(&respondent_ids)?;
        check_unique(&item_ids)?;
        let expected = respondent_ids.len() * item_ids.len();
        if cells.len() != expected {
            return Err(Error::Dimension {
                what: "response matrix cells",
                expected,
                found: cells.len(),
            });
        }
        if let Some(pos) = cells.iter().position(|&c| c > 1) {
            return Err(Error::invalid(format!(
                "response cell ({}, {}) is {}, expected 0 or 1",
                pos / item_ids.len(),
                pos % item_ids.len(),
                cells[pos]
            )));
        }
        Ok(Self {
            respondent_ids,
            item_ids,
            cells,
        })
    }

    pub fn respondent_ids(&self) -> &[String] {
        &self.respondent_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn n_respondents(&self) -> usize {
        self.respondent_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn row(&self, respondent: usize) -> &[u8] {
        let n = self.n_items();
        &self.cells[respondent * n..(respondent + 1) * n]
    }

    pub fn get(&self, respondent: usize, item: usize) -> u8 {
        self.cells[respondent * self.n_items() + item]
    }

    pub fn column(&self, item: usize) -> Vec<u8> {
        (0..self.n_respondents()).map(|j| self.get(j, item)).collect()
    }

    pub fn respondent_index(&self, id: &str) -> Option<usize> {
        self.respondent_ids.iter().position(|r| r == id)
    }

    /// Number of correct answers per item.
    pub fn column_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.n_items()];
        for j in 0..self.n_respondents() {
            for (s, &u) in sums.iter_mut().zip(self.row(j)) {
                *s += usize::from(u);
            }
        }
        sums
    }

    /// Returns a matrix with rows reordered by `order` (a permutation).
    pub fn permute_respondents(&self, order: &[usize]) -> Result<Self> {
        let ids = order.iter().map(|&j| self.respondent_ids[j].clone()).collect();
        let cells = order.iter().flat_map(|&j| self.row(j).to_vec()).collect();
        Self::new(ids, self.item_ids.clone(), cells)
    }

    /// Returns a matrix with columns reordered by `order` (a permutation).
    pub fn permute_items(&self, order: &[usize]) -> Result<Self> {
        let ids = order.iter().map(|&i| self.item_ids[i].clone()).collect();
        let mut cells = Vec::with_capacity(self.cells.len());
        for j in 0..self.n_respondents() {
            cells.extend(order.iter().map(|&i| self.get(j, i)));
        }
        Self::new(self.respondent_ids.clone(), ids, cells)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.cells.len() * 2 + 64);
        out.push_str("respondent");
        for id in &self.item_ids {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for (j, id) in self.respondent_ids.iter().enumerate() {
            out.push_str(id);
            for &u in self.row(j) {
                out.push(',');
                out.push(if u == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        parse_binary_table(text, "response matrix")
            .map(|(respondents, items, cells)| Self { respondent_ids: respondents, item_ids: items, cells })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }
}

/// Parses the `respondent,<ids...>` table with `0`/`1` cells. Also used for
/// the predictions file, which shares the layout with class indices as cells.
pub(crate) fn parse_binary_table(
    text: &str,
    context: &str,
) -> Result<(Vec<String>, Vec<String>, Vec<u8>)> {
    let parse_err = |line: usize, column: usize, message: String| Error::Parse {
        context: context.to_string(),
        line,
        column,
        message,
    };
    let mut lines = text.split('\n');
    let header = lines
        .next()
        .filter(|h| !h.is_empty())
        .ok_or_else(|| parse_err(1, 1, "missing header".into()))?;
    let mut header_cells = header.split(',');
    if header_cells.next() != Some("respondent") {
        return Err(parse_err(1, 1, "header must start with `respondent`".into()));
    }
    let item_ids: Vec<String> = header_cells.map(str::to_string).collect();
    if item_ids.is_empty() {
        return Err(parse_err(1, 2, "header lists no items".into()));
    }
    if let Some(pos) = item_ids.iter().position(|id| id.is_empty()) {
        return Err(parse_err(1, pos + 2, "empty item id".into()));
    }
    check_unique(&item_ids)?;

    let mut respondent_ids = Vec::new();
    let mut cells = Vec::new();
    for (k, line) in lines.enumerate() {
        let line_no = k + 2;
        if line.is_empty() {
            // Only the trailing newline may produce an empty line.
            if text.split('\n').count() == line_no {
                break;
            }
            return Err(parse_err(line_no, 1, "empty line".into()));
        }
        let mut fields = line.split(',');
        let id = fields.next().unwrap_or_default();
        if id.is_empty() {
            return Err(parse_err(line_no, 1, "empty respondent id".into()));
        }
        let mut count = 0;
        for (c, field) in fields.enumerate() {
            let value = match field {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(parse_err(
                        line_no,
                        c + 2,
                        format!("cell `{other}` for item `{}` is not 0 or 1",
                            item_ids.get(c).map_or("?", String::as_str)),
                    ))
                }
            };
            cells.push(value);
            count += 1;
        }
        if count != item_ids.len() {
            return Err(parse_err(
                line_no,
                count + 2,
                format!("expected {} cells, found {count}", item_ids.len()),
            ));
        }
        respondent_ids.push(id.to_string());
    }
    check_unique(&respondent_ids)?;
    Ok((respondent_ids, item_ids, cells))
}

/// Entry `i` is 1 iff `predicted[i] == truth[i]`.
pub fn responses_from_predictions(predicted: &[u8], truth: &[u8]) -> Result<Vec<u8>> {
    if predicted.len() != truth.len() {
        return Err(Error::Dimension {
            what: "predictions vs truth",
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    Ok(predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| u8::from(p == t))
        .collect())
}

/// Predicted labels of the seven artificial classifiers, in
/// [`ARTIFICIAL_IDS`] order. Random classifiers predict each class with
/// probability 1/2.
pub fn artificial_predictions(
    truth: &[u8],
    train_majority_class: u8,
    random_seeds: [u64; 3],
) -> Vec<(String, Vec<u8>)> {
    let n = truth.len();
    let minority = 1 - train_majority_class;
    let mut out = vec![
        ("optimal".to_string(), truth.to_vec()),
        ("pessimal".to_string(), truth.iter().map(|t| 1 - t).collect()),
        ("majority".to_string(), vec![train_majority_class; n]),
        ("minority".to_string(), vec![minority; n]),
    ];
    for (k, seed) in random_seeds.iter().enumerate() {
        let mut rng = rng_from_seed(*seed);
        let row = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
        out.push((format!("rand{}", k + 1), row));
    }
    out
}

/// Response rows of the seven artificial classifiers.
pub fn artificial_rows(
    truth: &[u8],
    train_majority_class: u8,
    random_seeds: [u64; 3],
) -> Vec<(String, Vec<u8>)> {
    artificial_predictions(truth, train_majority_class, random_seeds)
        .into_iter()
        .map(|(id, pred)| {
            let row = pred.iter().zip(truth).map(|(p, t)| u8::from(p == t)).collect();
            (id, row)
        })
        .collect()
}

/// Stacks `(id, row)` pairs into a matrix, keeping insertion order.
pub fn assemble_matrix(item_ids: Vec<String>, rows: Vec<(String, Vec<u8>)>) -> Result<ResponseMatrix> {
    if rows.len() < 2 {
        return Err(Error::InsufficientData {
            what: "response matrix respondents",
            needed: 2,
            found: rows.len(),
        });
    }
    let width = item_ids.len();
    let mut ids = Vec::with_capacity(rows.len());
    let mut cells = Vec::with_capacity(rows.len() * width);
    for (id, row) in rows {
        if row.len() != width {
            return Err(Error::Dimension {
                what: "response row length",
                expected: width,
                found: row.len(),
            });
        }
        ids.push(id);
        cells.extend(row);
    }
    ResponseMatrix::new(ids, item_ids, cells)
}
