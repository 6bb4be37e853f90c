//! CART classification tree with Gini impurity.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::Classifier;
use crate::dataset::LabeledDataset;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        /// Fraction of class-1 samples reaching the leaf.
        positive: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// An unpruned binary decision tree. Samples with `x[feature] <= threshold`
/// go left.
#[derive(Debug, Clone)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TreeOptions {
    /// Features examined per split; `None` means all of them.
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
}

struct BestSplit {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

impl DecisionTree {
    /// Fits on the rows listed in `samples` (repeats allowed, as produced by
    /// bootstrapping). `rng` drives feature subsampling only.
    pub fn fit(
        data: &LabeledDataset,
        samples: &[usize],
        options: TreeOptions,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut tree = Self {
            nodes: Vec::new(),
            n_features: data.n_features(),
        };
        let mut indices = samples.to_vec();
        tree.grow(data, &mut indices, 0, options, rng);
        tree
    }

    fn grow(
        &mut self,
        data: &LabeledDataset,
        samples: &mut [usize],
        depth: usize,
        options: TreeOptions,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let labels = data.labels();
        let pos = samples.iter().filter(|&&i| labels[i] == 1).count();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            positive: pos as f64 / samples.len().max(1) as f64,
        });
        let pure = pos == 0 || pos == samples.len();
        let depth_reached = options.max_depth.is_some_and(|d| depth >= d);
        if pure || samples.len() < 2 || depth_reached {
            return id;
        }
        let Some(split) = self.best_split(data, samples, pos, options, rng) else {
            return id;
        };
        let mid = partition(samples, |&i| data.row(i)[split.feature] <= split.threshold);
        let (left_samples, right_samples) = samples.split_at_mut(mid);
        let left = self.grow(data, left_samples, depth + 1, options, rng);
        let right = self.grow(data, right_samples, depth + 1, options, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    /// Features are visited in random order until `max_features` non-constant
    /// ones have been evaluated; ties on impurity go to the lowest feature
    /// index, then the lowest threshold.
    fn best_split(
        &self,
        data: &LabeledDataset,
        samples: &[usize],
        pos: usize,
        options: TreeOptions,
        rng: &mut ChaCha8Rng,
    ) -> Option<BestSplit> {
        let d = data.n_features();
        let mut features: Vec<usize> = (0..d).collect();
        let budget = options.max_features.unwrap_or(d).clamp(1, d);
        if budget < d {
            features.shuffle(rng);
        }
        let labels = data.labels();
        let n = samples.len();
        let mut best: Option<BestSplit> = None;
        let mut evaluated = 0;
        let mut column: Vec<(f64, u8)> = Vec::with_capacity(n);
        for &f in &features {
            if evaluated >= budget {
                break;
            }
            column.clear();
            column.extend(samples.iter().map(|&i| (data.row(i)[f], labels[i])));
            column.sort_by(|x, y| x.0.total_cmp(&y.0));
            if column[0].0 == column[n - 1].0 {
                continue;
            }
            evaluated += 1;
            let mut left_pos = 0;
            for k in 1..n {
                left_pos += usize::from(column[k - 1].1);
                if column[k].0 == column[k - 1].0 {
                    continue;
                }
                let impurity = (k as f64 * gini(left_pos, k)
                    + (n - k) as f64 * gini(pos - left_pos, n - k))
                    / n as f64;
                let threshold = column[k - 1].0 + (column[k].0 - column[k - 1].0) / 2.0;
                let better = match &best {
                    None => true,
                    Some(b) => {
                        impurity < b.impurity
                            || (impurity == b.impurity
                                && (f < b.feature || (f == b.feature && threshold < b.threshold)))
                    }
                };
                if better {
                    best = Some(BestSplit {
                        impurity,
                        feature: f,
                        threshold,
                    });
                }
            }
        }
        best
    }

    /// Class-1 fraction of the leaf reached by `x`.
    pub fn positive_fraction(&self, x: &[f64]) -> f64 {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                Node::Leaf { positive } => return *positive,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

/// In-place partition; returns the number of elements satisfying `pred`,
/// which end up first. Keeps relative order on both sides.
fn partition(items: &mut [usize], pred: impl Fn(&usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = items.iter().partition(|i| pred(i));
    let mid = yes.len();
    items[..mid].copy_from_slice(&yes);
    items[mid..].copy_from_slice(&no);
    mid
}

impl Classifier for DecisionTree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_one(&self, x: &[f64]) -> u8 {
        u8::from(self.positive_fraction(x) > 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn separable_one_feature() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..20).map(|i| u8::from(i >= 12)).collect();
        let ds = LabeledDataset::new("s", vec!["x".into()], rows, labels.clone()).unwrap();
        let all: Vec<usize> = (0..20).collect();
        let tree = DecisionTree::fit(&ds, &all, TreeOptions::default(), &mut rng_from_seed(0));
        assert_eq!(tree.n_nodes(), 3);
        for (i, &label) in labels.iter().enumerate() {
            assert_eq!(tree.predict_one(&[i as f64]), label);
        }
        assert_eq!(tree.predict_one(&[-100.0]), 0);
        assert_eq!(tree.predict_one(&[100.0]), 1);
        assert_eq!(tree.predict_one(&[11.6]), 1);
        assert_eq!(tree.predict_one(&[11.4]), 0);
    }

    #[test]
    fn tie_goes_to_lowest_feature() {
        // Both features separate perfectly; the first must be chosen.
        let rows = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        let ds = LabeledDataset::new("t", vec!["a".into(), "b".into()], rows, vec![0, 0, 1, 1]).unwrap();
        let tree = DecisionTree::fit(&ds, &[0, 1, 2, 3], TreeOptions::default(), &mut rng_from_seed(0));
        match &tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1.5);
            }
            Node::Leaf { .. } => panic!("expected a split"),
        }
    }

    #[test]
    fn xor_is_learned_exactly() {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let labels = vec![0, 1, 1, 0];
        let ds = LabeledDataset::new("x", vec!["a".into(), "b".into()], rows.clone(), labels.clone()).unwrap();
        let tree = DecisionTree::fit(&ds, &[0, 1, 2, 3], TreeOptions::default(), &mut rng_from_seed(0));
        for (r, l) in rows.iter().zip(labels) {
            assert_eq!(tree.predict_one(r), l);
        }
    }
}
