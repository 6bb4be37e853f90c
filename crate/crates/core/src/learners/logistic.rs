use super::Classifier;
use crate::dataset::LabeledDataset;
use crate::stats::{log_sigmoid, sigmoid};

#[derive(Debug, Clone, Copy)]
pub struct LogisticOptions {
    pub l2: f64,
    pub epochs: usize,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            l2: 1e-2,
            epochs: 500,
        }
    }
}

/// L2-regularized logistic regression on standardized features, fitted by
/// full-batch gradient descent. The step size is `1 / L` with
/// `L = (d + 1) / 4 + l2`, an upper bound on the Lipschitz constant of the
/// gradient for standardized inputs, which makes every epoch a descent step.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    means: Vec<f64>,
    scales: Vec<f64>,
    weights: Vec<f64>,
    bias: f64,
    loss_history: Vec<f64>,
}

impl LogisticRegression {
    pub fn fit(data: &LabeledDataset, options: LogisticOptions) -> Self {
        let d = data.n_features();
        let n = data.len() as f64;
        let mut means = vec![0.0; d];
        let mut scales = vec![1.0; d];
        for j in 0..d {
            let col = data.column(j);
            let m = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt();
            means[j] = m;
            scales[j] = if sd > 0.0 { sd } else { 1.0 };
        }
        let xs: Vec<Vec<f64>> = (0..data.len())
            .map(|i| {
                data.row(i)
                    .iter()
                    .zip(means.iter().zip(&scales))
                    .map(|(x, (m, s))| (x - m) / s)
                    .collect()
            })
            .collect();
        let ys: Vec<f64> = data.labels().iter().map(|&l| f64::from(l)).collect();

        let step = 1.0 / ((d as f64 + 1.0) / 4.0 + options.l2);
        let mut weights = vec![0.0; d];
        let mut bias = 0.0;
        let mut loss_history = Vec::with_capacity(options.epochs + 1);
        let loss = |w: &[f64], b: f64| {
            let data_loss: f64 = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| {
                    let z = b + w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
                    -(y * log_sigmoid(z) + (1.0 - y) * log_sigmoid(-z))
                })
                .sum::<f64>()
                / n;
            data_loss + 0.5 * options.l2 * w.iter().map(|wi| wi * wi).sum::<f64>()
        };
        loss_history.push(loss(&weights, bias));
        for _ in 0..options.epochs {
            let mut grad_w = vec![0.0; d];
            let mut grad_b = 0.0;
            for (x, y) in xs.iter().zip(&ys) {
                let z = bias + weights.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
                let r = sigmoid(z) - y;
                grad_b += r;
                for (g, xi) in grad_w.iter_mut().zip(x) {
                    *g += r * xi;
                }
            }
            for (w, g) in weights.iter_mut().zip(&grad_w) {
                *w -= step * (g / n + options.l2 * *w);
            }
            bias -= step * grad_b / n;
            loss_history.push(loss(&weights, bias));
        }
        Self {
            means,
            scales,
            weights,
            bias,
            loss_history,
        }
    }

    /// Training objective before the first epoch and after each epoch.
    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        let z = self.bias
            + x.iter()
                .zip(&self.weights)
                .zip(self.means.iter().zip(&self.scales))
                .map(|((xi, w), (m, s))| w * (xi - m) / s)
                .sum::<f64>();
        sigmoid(z)
    }
}

impl Classifier for LogisticRegression {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_one(&self, x: &[f64]) -> u8 {
        u8::from(self.probability(x) > 0.5)
    }
}
