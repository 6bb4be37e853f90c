use super::Classifier;
use crate::dataset::LabeledDataset;
use crate::stats::percentile;

fn class_log_priors(data: &LabeledDataset) -> [f64; 2] {
    let [n0, n1] = data.class_counts();
    let n = data.len() as f64;
    [(n0 as f64 / n).ln(), (n1 as f64 / n).ln()]
}

fn argmax(scores: [f64; 2]) -> u8 {
    u8::from(scores[1] > scores[0])
}

/// Gaussian naive Bayes. Variances get `1e-9 * max feature variance` added.
#[derive(Debug, Clone)]
pub struct GaussianNb {
    log_priors: [f64; 2],
    means: [Vec<f64>; 2],
    variances: [Vec<f64>; 2],
}

impl GaussianNb {
    pub fn fit(data: &LabeledDataset) -> Self {
        let d = data.n_features();
        let mut means = [vec![0.0; d], vec![0.0; d]];
        let mut variances = [vec![0.0; d], vec![0.0; d]];
        let counts = data.class_counts();
        for i in 0..data.len() {
            let k = usize::from(data.labels()[i]);
            for (m, x) in means[k].iter_mut().zip(data.row(i)) {
                *m += x;
            }
        }
        for k in 0..2 {
            for m in means[k].iter_mut() {
                *m /= counts[k] as f64;
            }
        }
        for i in 0..data.len() {
            let k = usize::from(data.labels()[i]);
            for ((v, m), x) in variances[k].iter_mut().zip(&means[k]).zip(data.row(i)) {
                *v += (x - m) * (x - m);
            }
        }
        for (class, &n) in variances.iter_mut().zip(&counts) {
            for v in class.iter_mut() {
                *v /= n as f64;
            }
        }
        let max_var = (0..d)
            .map(|j| {
                let col = data.column(j);
                let m = col.iter().sum::<f64>() / col.len() as f64;
                col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / col.len() as f64
            })
            .fold(0.0, f64::max);
        let smoothing = 1e-9 * max_var.max(f64::MIN_POSITIVE);
        for class in variances.iter_mut() {
            for v in class.iter_mut() {
                *v += smoothing;
            }
        }
        Self {
            log_priors: class_log_priors(data),
            means,
            variances,
        }
    }
}

impl Classifier for GaussianNb {
    fn n_features(&self) -> usize {
        self.means[0].len()
    }

    fn predict_one(&self, x: &[f64]) -> u8 {
        let score = |k: usize| {
            let mut s = self.log_priors[k];
            for ((xi, m), v) in x.iter().zip(&self.means[k]).zip(&self.variances[k]) {
                s -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (xi - m) * (xi - m) / v);
            }
            s
        };
        argmax([score(0), score(1)])
    }
}

/// Bernoulli naive Bayes on features binarized at their training medians
/// (`x > median` is 1), with Laplace smoothing.
#[derive(Debug, Clone)]
pub struct BernoulliNb {
    thresholds: Vec<f64>,
    log_priors: [f64; 2],
    /// `ln P(x_j = 1 | k)` and `ln P(x_j = 0 | k)`.
    log_on: [Vec<f64>; 2],
    log_off: [Vec<f64>; 2],
}

impl BernoulliNb {
    pub fn fit(data: &LabeledDataset) -> Self {
        let d = data.n_features();
        let thresholds: Vec<f64> = (0..d).map(|j| percentile(&data.column(j), 50.0)).collect();
        let counts = data.class_counts();
        let mut on = [vec![0usize; d], vec![0usize; d]];
        for i in 0..data.len() {
            let k = usize::from(data.labels()[i]);
            for (j, x) in data.row(i).iter().enumerate() {
                if *x > thresholds[j] {
                    on[k][j] += 1;
                }
            }
        }
        let mut log_on = [vec![0.0; d], vec![0.0; d]];
        let mut log_off = [vec![0.0; d], vec![0.0; d]];
        for k in 0..2 {
            for j in 0..d {
                let p = (on[k][j] as f64 + 1.0) / (counts[k] as f64 + 2.0);
                log_on[k][j] = p.ln();
                log_off[k][j] = (1.0 - p).ln();
            }
        }
        Self {
            thresholds,
            log_priors: class_log_priors(data),
            log_on,
            log_off,
        }
    }
}

impl Classifier for BernoulliNb {
    fn n_features(&self) -> usize {
        self.thresholds.len()
    }

    fn predict_one(&self, x: &[f64]) -> u8 {
        let score = |k: usize| {
            let mut s = self.log_priors[k];
            for (j, xi) in x.iter().enumerate() {
                s += if *xi > self.thresholds[j] {
                    self.log_on[k][j]
                } else {
                    self.log_off[k][j]
                };
            }
            s
        };
        argmax([score(0), score(1)])
    }
}
