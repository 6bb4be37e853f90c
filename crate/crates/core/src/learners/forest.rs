use rand::Rng;

use super::tree::{DecisionTree, TreeOptions};
use super::Classifier;
use crate::dataset::LabeledDataset;
use crate::seed::derived_rng;

/// Bagged CART trees with `floor(sqrt(d))` features per split. Each tree
/// sees a bootstrap sample of size `n`; trees are grown without a depth
/// limit. Prediction averages leaf class fractions and thresholds at 1/2
/// (ties to class 0).
#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_features: usize,
}

impl RandomForest {
    pub fn fit(data: &LabeledDataset, n_trees: usize, seed: u64) -> Self {
        let n = data.len();
        let max_features = ((data.n_features() as f64).sqrt().floor() as usize).max(1);
        let options = TreeOptions {
            max_features: Some(max_features),
            max_depth: None,
        };
        let trees = (0..n_trees)
            .map(|t| {
                let mut rng = derived_rng(seed, &format!("tree/{t}"));
                let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                DecisionTree::fit(data, &bootstrap, options, &mut rng)
            })
            .collect();
        Self {
            trees,
            n_features: data.n_features(),
        }
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn positive_score(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.positive_fraction(x)).sum::<f64>() / self.trees.len() as f64
    }
}

impl Classifier for RandomForest {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_one(&self, x: &[f64]) -> u8 {
        u8::from(self.positive_score(x) > 0.5)
    }
}
