//! A native pool of lightweight binary classifiers: random forests of many
//! sizes, k-nearest neighbours, Gaussian and Bernoulli naive Bayes, a single
//! CART tree and logistic regression.

mod forest;
mod knn;
mod logistic;
mod naive_bayes;
mod tree;

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use forest::RandomForest;
pub use knn::KNearestNeighbors;
pub use logistic::{LogisticOptions, LogisticRegression};
pub use naive_bayes::{BernoulliNb, GaussianNb};
pub use tree::{DecisionTree, TreeOptions};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

pub trait Classifier: Send + Sync {
    fn n_features(&self) -> usize;

    fn predict_one(&self, x: &[f64]) -> u8;

    fn predict(&self, data: &LabeledDataset) -> Vec<u8> {
        (0..data.len()).map(|i| self.predict_one(data.row(i))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolConfig {
    /// One random forest per entry. Repeated sizes get distinct ids.
    pub rf_tree_counts: Vec<usize>,
    pub knn_ks: Vec<usize>,
    pub include_gaussian_nb: bool,
    pub include_bernoulli_nb: bool,
    pub include_tree: bool,
    pub include_logistic: bool,
    pub seed: u64,
}

impl Default for PoolConfig {
    fn default() -> Self {
        let mut rf_tree_counts: Vec<usize> = (1..=120).collect();
        rf_tree_counts.extend([3, 5, 100]);
        Self {
            rf_tree_counts,
            knn_ks: vec![2, 3, 5, 8],
            include_gaussian_nb: true,
            include_bernoulli_nb: true,
            include_tree: true,
            include_logistic: true,
            seed: 0,
        }
    }
}

impl PoolConfig {
    /// A config with no members; enable what you need.
    pub fn empty(seed: u64) -> Self {
        Self {
            rf_tree_counts: Vec::new(),
            knn_ks: Vec::new(),
            include_gaussian_nb: false,
            include_bernoulli_nb: false,
            include_tree: false,
            include_logistic: false,
            seed,
        }
    }

    /// Member ids in pool order. The first forest with `n` trees is `rf_{n}`;
    /// later forests of the same size are `rf_{n}_2`, `rf_{n}_3`, ...
    pub fn member_specs(&self) -> Vec<(String, MemberKind)> {
        let mut out = Vec::new();
        let mut seen: Vec<usize> = Vec::new();
        for &t in &self.rf_tree_counts {
            let repeat = seen.iter().filter(|&&s| s == t).count();
            seen.push(t);
            let id = if repeat == 0 {
                format!("rf_{t}")
            } else {
                format!("rf_{t}_{}", repeat + 1)
            };
            out.push((id, MemberKind::Forest(t)));
        }
        for &k in &self.knn_ks {
            out.push((format!("knn_{k}"), MemberKind::Knn(k)));
        }
        if self.include_gaussian_nb {
            out.push(("gaussian_nb".into(), MemberKind::GaussianNb));
        }
        if self.include_bernoulli_nb {
            out.push(("bernoulli_nb".into(), MemberKind::BernoulliNb));
        }
        if self.include_tree {
            out.push(("decision_tree".into(), MemberKind::Tree));
        }
        if self.include_logistic {
            out.push(("logistic".into(), MemberKind::Logistic));
        }
        out
    }

    fn validate(&self, train_size: usize) -> Result<()> {
        if let Some(t) = self.rf_tree_counts.iter().find(|&&t| t == 0) {
            return Err(Error::invalid(format!("forest tree count must be positive, got {t}")));
        }
        if let Some(k) = self.knn_ks.iter().find(|&&k| k == 0 || k > train_size) {
            return Err(Error::invalid(format!(
                "k = {k} is outside [1, {train_size}] (training size)"
            )));
        }
        let mut unique = HashSet::new();
        if let Some(k) = self.knn_ks.iter().find(|&&k| !unique.insert(k)) {
            return Err(Error::DuplicateId(format!("knn_{k}")));
        }
        if self.member_specs().is_empty() {
            return Err(Error::invalid("pool config requests no members"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemberKind {
    Forest(usize),
    Knn(usize),
    GaussianNb,
    BernoulliNb,
    Tree,
    Logistic,
}

pub struct PoolMember {
    pub id: String,
    pub model: Box<dyn Classifier>,
}

pub struct TrainedPool {
    pub members: Vec<PoolMember>,
    pub provenance: PoolConfig,
    n_features: usize,
}

impl std::fmt::Debug for TrainedPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrainedPool")
            .field("members", &self.member_ids())
            .field("n_features", &self.n_features)
            .finish()
    }
}

impl TrainedPool {
    pub fn member_ids(&self) -> Vec<&str> {
        self.members.iter().map(|m| m.id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&dyn Classifier> {
        self.members.iter().find(|m| m.id == id).map(|m| m.model.as_ref())
    }
}

fn train_member(train: &LabeledDataset, kind: MemberKind, seed: u64) -> Box<dyn Classifier> {
    match kind {
        MemberKind::Forest(t) => Box::new(RandomForest::fit(train, t, seed)),
        MemberKind::Knn(k) => Box::new(KNearestNeighbors::fit(train, k)),
        MemberKind::GaussianNb => Box::new(GaussianNb::fit(train)),
        MemberKind::BernoulliNb => Box::new(BernoulliNb::fit(train)),
        MemberKind::Tree => {
            let all: Vec<usize> = (0..train.len()).collect();
            let mut rng = rng_from_seed(seed);
            Box::new(DecisionTree::fit(train, &all, TreeOptions::default(), &mut rng))
        }
        MemberKind::Logistic => Box::new(LogisticRegression::fit(train, LogisticOptions::default())),
    }
}

/// Trains every configured member. Member seeds are derived from
/// `(config.seed, member id)`, so results do not depend on thread scheduling.
pub fn train_pool(train: &LabeledDataset, config: &PoolConfig) -> Result<TrainedPool> {
    if train.is_empty() {
        return Err(Error::InsufficientData {
            what: "training instances",
            needed: 1,
            found: 0,
        });
    }
    config.validate(train.len())?;
    let members = config
        .member_specs()
        .into_par_iter()
        .map(|(id, kind)| {
            let seed = derive_seed(config.seed, &id);
            let model = train_member(train, kind, seed);
            PoolMember { id, model }
        })
        .collect();
    Ok(TrainedPool {
        members,
        provenance: config.clone(),
        n_features: train.n_features(),
    })
}

/// Predictions of every member on every test instance (members x instances).
pub fn predict_pool(pool: &TrainedPool, test: &LabeledDataset) -> Result<Vec<Vec<u8>>> {
    if test.n_features() != pool.n_features {
        return Err(Error::Dimension {
            what: "test feature count",
            expected: pool.n_features,
            found: test.n_features(),
        });
    }
    Ok(pool
        .members
        .par_iter()
        .map(|m| m.model.predict(test))
        .collect())
}
