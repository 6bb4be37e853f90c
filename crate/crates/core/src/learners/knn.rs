use super::Classifier;
use crate::dataset::LabeledDataset;

/// k-nearest neighbours under Euclidean distance. A tied vote (possible for
/// even k) goes to the class of the single nearest neighbour; equal
/// distances are ordered by training row index.
#[derive(Debug, Clone)]
pub struct KNearestNeighbors {
    k: usize,
    data: LabeledDataset,
}

impl KNearestNeighbors {
    pub fn fit(data: &LabeledDataset, k: usize) -> Self {
        Self {
            k,
            data: data.clone(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl Classifier for KNearestNeighbors {
    fn n_features(&self) -> usize {
        self.data.n_features()
    }

    fn predict_one(&self, x: &[f64]) -> u8 {
        let mut dist: Vec<(f64, usize)> = (0..self.data.len())
            .map(|i| {
                let d2: f64 = self
                    .data
                    .row(i)
                    .iter()
                    .zip(x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d2, i)
            })
            .collect();
        let k = self.k.min(dist.len());
        dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let neighbours = &mut dist[..k];
        neighbours.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let labels = self.data.labels();
        let ones = neighbours.iter().filter(|(_, i)| labels[*i] == 1).count();
        match (2 * ones).cmp(&k) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => labels[neighbours[0].1],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> LabeledDataset {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0], vec![10.0], vec![11.0]];
        LabeledDataset::new("l", vec!["x".into()], rows, vec![0, 0, 1, 1, 1]).unwrap()
    }

    #[test]
    fn one_nn_returns_training_label() {
        let ds = line();
        let knn = KNearestNeighbors::fit(&ds, 1);
        for i in 0..ds.len() {
            assert_eq!(knn.predict_one(ds.row(i)), ds.labels()[i]);
        }
    }

    #[test]
    fn even_k_tie_uses_nearest() {
        let knn = KNearestNeighbors::fit(&line(), 2);
        // Neighbours of 1.4 are 1.0 (class 0) and 2.0 (class 1): nearest wins.
        assert_eq!(knn.predict_one(&[1.4]), 0);
        assert_eq!(knn.predict_one(&[1.6]), 1);
    }
}
