//! Marginal maximum likelihood estimation of the 3PL model by EM.
//!
//! Abilities are integrated out over a fixed, uniformly spaced grid carrying
//! standard-normal weights. Each EM iteration computes per-respondent
//! posteriors over the grid (E-step), then maximizes, item by item, the
//! expected complete-data log-likelihood plus the log-prior penalty
//! (M-step). The M-step only ever accepts parameter moves that increase the
//! item's penalized objective, so the penalized marginal log-likelihood is
//! non-decreasing across iterations.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{icc_gradient, icc_log_probs, ItemParams};
use crate::error::{Error, Result};
use crate::response::ResponseMatrix;
use crate::seed::derived_rng;
use crate::stats::{log_sum_exp, sigmoid};

/// Penalty terms on item parameters. `a ~ N(a_mean, a_sd)` on the raw scale
/// so negative discrimination stays reachable; `c / c_max ~ Beta(alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub a_mean: f64,
    pub a_sd: f64,
    pub b_mean: f64,
    pub b_sd: f64,
    pub c_alpha: f64,
    pub c_beta: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            a_mean: 1.0,
            a_sd: 2.0,
            b_mean: 0.0,
            b_sd: 2.0,
            c_alpha: 2.0,
            c_beta: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub quadrature_points: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub max_em_iterations: usize,
    /// Stop when the mean absolute change over all item parameters drops below this.
    pub convergence_epsilon: f64,
    pub prior: PriorConfig,
    pub c_max: f64,
    /// `a` and `b` are kept within `[-param_bound, param_bound]`.
    pub param_bound: f64,
    pub max_newton_iterations: usize,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            quadrature_points: 61,
            theta_min: -4.0,
            theta_max: 4.0,
            max_em_iterations: 200,
            convergence_epsilon: 1e-5,
            prior: PriorConfig::default(),
            c_max: 0.5,
            param_bound: 4.0,
            max_newton_iterations: 50,
            seed: 0,
            parallel: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let p = &self.prior;
        let checks = [
            (self.quadrature_points >= 11, "quadrature_points must be >= 11"),
            (self.theta_min < self.theta_max, "theta grid range is empty"),
            (self.convergence_epsilon > 0.0, "convergence_epsilon must be > 0"),
            (self.max_em_iterations >= 1, "max_em_iterations must be >= 1"),
            (self.c_max > 0.0 && self.c_max < 1.0, "c_max must lie in (0, 1)"),
            (self.param_bound > 0.0, "param_bound must be > 0"),
            (p.a_sd > 0.0 && p.b_sd > 0.0, "prior standard deviations must be > 0"),
            (p.c_alpha >= 1.0 && p.c_beta >= 1.0, "guessing prior shapes must be >= 1"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::invalid(msg));
            }
        }
        Ok(())
    }
}

/// Constant response vectors, for items (columns) or respondents (rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    None,
    AllCorrect,
    AllWrong,
}

impl Degeneracy {
    pub fn of(responses: impl IntoIterator<Item = u8>) -> Self {
        let (mut ones, mut total) = (0usize, 0usize);
        for u in responses {
            ones += usize::from(u);
            total += 1;
        }
        match ones {
            0 => Degeneracy::AllWrong,
            n if n == total => Degeneracy::AllCorrect,
            _ => Degeneracy::None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Degeneracy::None => "none",
            Degeneracy::AllCorrect => "all_correct",
            Degeneracy::AllWrong => "all_wrong",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Degeneracy::None),
            "all_correct" => Some(Degeneracy::AllCorrect),
            "all_wrong" => Some(Degeneracy::AllWrong),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbilityEstimate {
    pub theta: f64,
    pub degenerate: Degeneracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub item_ids: Vec<String>,
    pub respondent_ids: Vec<String>,
    pub items: Vec<ItemParams>,
    pub item_flags: Vec<Degeneracy>,
    pub abilities: Vec<AbilityEstimate>,
    /// Penalized marginal log-likelihood at the returned parameters.
    pub log_likelihood: f64,
    /// Penalized marginal log-likelihood at every iterate, starting from the
    /// initial values and ending at the returned parameters.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Uniform grid with normalized standard-normal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub log_weights: Vec<f64>,
}

impl Quadrature {
    pub fn uniform_normal(points: usize, min: f64, max: f64) -> Self {
        let step = (max - min) / (points - 1) as f64;
        let nodes: Vec<f64> = (0..points).map(|k| min + step * k as f64).collect();
        let log_density: Vec<f64> = nodes.iter().map(|x| -0.5 * x * x).collect();
        let norm = log_sum_exp(&log_density);
        let log_weights = log_density.iter().map(|l| l - norm).collect();
        Self { nodes, log_weights }
    }

    pub fn from_config(config: &FitConfig) -> Self {
        Self::uniform_normal(config.quadrature_points, config.theta_min, config.theta_max)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub fn log_prior(item: &ItemParams, prior: &PriorConfig, c_max: f64) -> f64 {
    let za = (item.a - prior.a_mean) / prior.a_sd;
    let zb = (item.b - prior.b_mean) / prior.b_sd;
    let s = item.c / c_max;
    let mut lp = -0.5 * (za * za + zb * zb);
    if prior.c_alpha != 1.0 {
        lp += (prior.c_alpha - 1.0) * s.ln();
    }
    if prior.c_beta != 1.0 {
        lp += (prior.c_beta - 1.0) * (-s).ln_1p();
    }
    if lp.is_nan() {
        f64::NEG_INFINITY
    } else {
        lp
    }
}

/// Posterior weights over the grid for every respondent.
struct Posterior {
    /// Row-major `n_respondents * n_nodes`.
    weights: Vec<f64>,
    marginal_log_likelihood: f64,
}

fn e_step(matrix: &ResponseMatrix, items: &[ItemParams], quad: &Quadrature, parallel: bool) -> Posterior {
    let q = quad.len();
    let mut ln_p = vec![0.0; items.len() * q];
    let mut ln_f = vec![0.0; items.len() * q];
    for (i, item) in items.iter().enumerate() {
        for (k, &theta) in quad.nodes.iter().enumerate() {
            let (lp, lf) = icc_log_probs(theta, item);
            ln_p[i * q + k] = lp;
            ln_f[i * q + k] = lf;
        }
    }
    let respondent = |j: usize| -> (Vec<f64>, f64) {
        let mut log_post = quad.log_weights.clone();
        for (i, &u) in matrix.row(j).iter().enumerate() {
            let table = if u == 1 { &ln_p } else { &ln_f };
            for (acc, v) in log_post.iter_mut().zip(&table[i * q..(i + 1) * q]) {
                *acc += v;
            }
        }
        let marginal = log_sum_exp(&log_post);
        for v in log_post.iter_mut() {
            *v = (*v - marginal).exp();
        }
        (log_post, marginal)
    };
    let per_respondent: Vec<(Vec<f64>, f64)> = if parallel {
        (0..matrix.n_respondents()).into_par_iter().map(respondent).collect()
    } else {
        (0..matrix.n_respondents()).map(respondent).collect()
    };
    let mut weights = Vec::with_capacity(matrix.n_respondents() * q);
    let mut marginal_log_likelihood = 0.0;
    for (w, m) in per_respondent {
        weights.extend(w);
        marginal_log_likelihood += m;
    }
    Posterior {
        weights,
        marginal_log_likelihood,
    }
}

/// Expected counts for one item: respondents at each node, and correct
/// answers at each node.
struct ItemCounts<'a> {
    nodes: &'a [f64],
    at_node: &'a [f64],
    correct: &'a [f64],
}

struct ItemObjective<'a> {
    counts: ItemCounts<'a>,
    prior: &'a PriorConfig,
    c_max: f64,
    bound: f64,
}

impl ItemObjective<'_> {
    fn value(&self, item: &ItemParams) -> f64 {
        let mut total = log_prior(item, self.prior, self.c_max);
        if !total.is_finite() {
            return f64::NEG_INFINITY;
        }
        let ItemCounts { nodes, at_node, correct } = &self.counts;
        for ((&theta, &n), &r) in nodes.iter().zip(*at_node).zip(*correct) {
            let (lp, lf) = icc_log_probs(theta, item);
            total += r * lp + (n - r) * lf;
        }
        total
    }

    /// Gradient and Fisher information (expected negative Hessian) of the
    /// penalized objective, in `(a, b, c)` order.
    fn score_and_information(&self, item: &ItemParams) -> ([f64; 3], [[f64; 3]; 3]) {
        let pr = self.prior;
        let mut grad = [
            -(item.a - pr.a_mean) / (pr.a_sd * pr.a_sd),
            -(item.b - pr.b_mean) / (pr.b_sd * pr.b_sd),
            (pr.c_alpha - 1.0) / item.c - (pr.c_beta - 1.0) / (self.c_max - item.c),
        ];
        let mut info = [[0.0; 3]; 3];
        info[0][0] = 1.0 / (pr.a_sd * pr.a_sd);
        info[1][1] = 1.0 / (pr.b_sd * pr.b_sd);
        info[2][2] = (pr.c_alpha - 1.0) / (item.c * item.c)
            + (pr.c_beta - 1.0) / ((self.c_max - item.c) * (self.c_max - item.c));
        let ItemCounts { nodes, at_node, correct } = &self.counts;
        for ((&theta, &n), &r) in nodes.iter().zip(*at_node).zip(*correct) {
            let z = item.a * (theta - item.b);
            let p = item.c + (1.0 - item.c) * sigmoid(z);
            let f = (1.0 - item.c) * sigmoid(-z);
            let pf = p * f;
            if pf <= 0.0 {
                continue;
            }
            let g = icc_gradient(theta, item);
            let d = [g.d_a, g.d_b, g.d_c];
            let w = (r - n * p) / pf;
            let v = n / pf;
            for x in 0..3 {
                grad[x] += w * d[x];
                for y in 0..3 {
                    info[x][y] += v * d[x] * d[y];
                }
            }
        }
        (grad, info)
    }

    fn project(&self, item: ItemParams) -> ItemParams {
        ItemParams {
            a: item.a.clamp(-self.bound, self.bound),
            b: item.b.clamp(-self.bound, self.bound),
            c: item.c.clamp(0.0, self.c_max),
        }
    }

    /// Projected Fisher scoring with step halving. Starting from a feasible
    /// point, no accepted move lowers the objective by more than rounding
    /// noise.
    fn maximize(&self, start: ItemParams, max_iterations: usize) -> ItemParams {
        let mut current = start;
        let mut current_value = self.value(&current);
        for _ in 0..max_iterations {
            let (grad, info) = self.score_and_information(&current);
            let direction = solve_spd3(&info, &grad).unwrap_or_else(|| {
                let scale = info[0][0] + info[1][1] + info[2][2];
                grad.map(|g| g / scale.max(1.0))
            });
            // A full step that loses no more than rounding noise is kept, so
            // the iteration can settle below the resolution of `value`.
            let noise = 8.0 * f64::EPSILON * current_value.abs().max(1.0);
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let candidate = self.project(ItemParams {
                    a: current.a + step * direction[0],
                    b: current.b + step * direction[1],
                    c: current.c + step * direction[2],
                });
                let value = self.value(&candidate);
                if value > current_value || (step == 1.0 && value >= current_value - noise) {
                    accepted = Some((candidate, value));
                    break;
                }
                step *= 0.5;
            }
            let Some((next, value)) = accepted else { break };
            let moved = (next.a - current.a)
                .abs()
                .max((next.b - current.b).abs())
                .max((next.c - current.c).abs());
            current = next;
            current_value = value;
            if moved < 1e-12 {
                break;
            }
        }
        current
    }

    /// Runs [`Self::maximize`] from the current point and from its mirror
    /// `(-a, -b)`, keeping the better end point. A local search started at
    /// `a > 0` cannot reach a decreasing curve once it settles on a flat one.
    fn maximize_with_mirror(&self, start: ItemParams, max_iterations: usize) -> ItemParams {
        let primary = self.maximize(start, max_iterations);
        let mirrored = self.project(ItemParams {
            a: -start.a.signum() * start.a.abs().max(1.0),
            b: -start.b,
            c: start.c,
        });
        let alternative = self.maximize(mirrored, max_iterations);
        if self.value(&alternative) > self.value(&primary) {
            alternative
        } else {
            primary
        }
    }
}

/// Solves `m x = v` for a symmetric positive definite 3x3 `m` via Cholesky.
#[allow(clippy::needless_range_loop)]
fn solve_spd3(m: &[[f64; 3]; 3], v: &[f64; 3]) -> Option<[f64; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = [0.0; 3];
    for i in 0..3 {
        let mut s = v[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut s = y[i];
        for k in i + 1..3 {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn initial_items(matrix: &ResponseMatrix, config: &FitConfig) -> Vec<ItemParams> {
    let n = matrix.n_respondents() as f64;
    let bound = config.param_bound;
    matrix
        .column_sums()
        .iter()
        .zip(matrix.item_ids())
        .map(|(&correct, id)| {
            let wrong = (n - correct as f64 + 0.5) / (n + 1.0);
            let b = (wrong / (1.0 - wrong)).ln().clamp(-0.75 * bound, 0.75 * bound);
            // Jitter keyed by item id, so column order does not matter.
            let mut rng = derived_rng(config.seed, &format!("init/{id}"));
            let mut jitter = || rng.random_range(-1e-3..1e-3);
            ItemParams {
                a: 1.0 + jitter(),
                b: b + jitter(),
                c: (0.1 + jitter()).clamp(1e-3, config.c_max - 1e-3),
            }
        })
        .collect()
}

fn check_dimensions(matrix: &ResponseMatrix) -> Result<()> {
    if matrix.n_respondents() < 2 {
        return Err(Error::InsufficientData {
            what: "respondents",
            needed: 2,
            found: matrix.n_respondents(),
        });
    }
    if matrix.n_items() < 2 {
        return Err(Error::InsufficientData {
            what: "items",
            needed: 2,
            found: matrix.n_items(),
        });
    }
    Ok(())
}

fn penalized(posterior: &Posterior, items: &[ItemParams], config: &FitConfig) -> f64 {
    posterior.marginal_log_likelihood
        + items
            .iter()
            .map(|it| log_prior(it, &config.prior, config.c_max))
            .sum::<f64>()
}

fn eap(posterior: &Posterior, quad: &Quadrature, matrix: &ResponseMatrix) -> Vec<AbilityEstimate> {
    let q = quad.len();
    (0..matrix.n_respondents())
        .map(|j| {
            let w = &posterior.weights[j * q..(j + 1) * q];
            let theta: f64 = w.iter().zip(&quad.nodes).map(|(p, t)| p * t).sum();
            AbilityEstimate {
                theta: theta.clamp(quad.nodes[0], quad.nodes[q - 1]),
                degenerate: Degeneracy::of(matrix.row(j).iter().copied()),
            }
        })
        .collect()
}

/// The symmetric grid makes `(theta, a, b) -> (-theta, -a, -b)` leave the
/// marginal likelihood unchanged, so only the prior on `a` picks the
/// orientation. Flip every item when the mirrored set has the larger prior.
fn orient(items: &mut [ItemParams], config: &FitConfig) {
    let mirrored: Vec<ItemParams> = items
        .iter()
        .map(|it| ItemParams { a: -it.a, b: -it.b, c: it.c })
        .collect();
    let prior_sum = |set: &[ItemParams]| -> f64 {
        set.iter().map(|it| log_prior(it, &config.prior, config.c_max)).sum()
    };
    if prior_sum(&mirrored) > prior_sum(items) + 1e-6 {
        items.copy_from_slice(&mirrored);
    }
}

/// Fits item parameters and abilities to a response matrix.
pub fn fit_3pl(matrix: &ResponseMatrix, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    check_dimensions(matrix)?;
    let quad = Quadrature::from_config(config);
    let q = quad.len();
    let n_items = matrix.n_items();

    let mut items = initial_items(matrix, config);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..config.max_em_iterations {
        let posterior = e_step(matrix, &items, &quad, config.parallel);
        trace.push(penalized(&posterior, &items, config));

        let mut at_node = vec![0.0; q];
        let mut correct = vec![0.0; n_items * q];
        for j in 0..matrix.n_respondents() {
            let w = &posterior.weights[j * q..(j + 1) * q];
            for (acc, p) in at_node.iter_mut().zip(w) {
                *acc += p;
            }
            for (i, &u) in matrix.row(j).iter().enumerate() {
                if u == 1 {
                    for (acc, p) in correct[i * q..(i + 1) * q].iter_mut().zip(w) {
                        *acc += p;
                    }
                }
            }
        }

        let update = |i: usize| -> ItemParams {
            let objective = ItemObjective {
                counts: ItemCounts {
                    nodes: &quad.nodes,
                    at_node: &at_node,
                    correct: &correct[i * q..(i + 1) * q],
                },
                prior: &config.prior,
                c_max: config.c_max,
                bound: config.param_bound,
            };
            objective.maximize_with_mirror(items[i], config.max_newton_iterations)
        };
        let mut next: Vec<ItemParams> = if config.parallel {
            (0..n_items).into_par_iter().map(update).collect()
        } else {
            (0..n_items).map(update).collect()
        };
        orient(&mut next, config);

        let change: f64 = items
            .iter()
            .zip(&next)
            .map(|(o, n)| (o.a - n.a).abs() + (o.b - n.b).abs() + (o.c - n.c).abs())
            .sum::<f64>()
            / (3 * n_items) as f64;
        items = next;
        iterations += 1;
        if change < config.convergence_epsilon {
            converged = true;
            break;
        }
    }

    let posterior = e_step(matrix, &items, &quad, config.parallel);
    let log_likelihood = penalized(&posterior, &items, config);
    trace.push(log_likelihood);
    let abilities = eap(&posterior, &quad, matrix);
    let item_flags = (0..n_items)
        .map(|i| Degeneracy::of(matrix.column(i)))
        .collect();

    Ok(FitResult {
        item_ids: matrix.item_ids().to_vec(),
        respondent_ids: matrix.respondent_ids().to_vec(),
        items,
        item_flags,
        abilities,
        log_likelihood,
        trace,
        iterations,
        converged,
    })
}

/// Expected-a-posteriori abilities for fixed item parameters, under the
/// standard-normal population prior on the configured grid.
pub fn estimate_abilities(
    matrix: &ResponseMatrix,
    items: &[ItemParams],
    config: &FitConfig,
) -> Result<Vec<AbilityEstimate>> {
    if items.len() != matrix.n_items() {
        return Err(Error::Dimension {
            what: "item parameters vs matrix columns",
            expected: matrix.n_items(),
            found: items.len(),
        });
    }
    config.validate()?;
    let quad = Quadrature::from_config(config);
    let posterior = e_step(matrix, items, &quad, config.parallel);
    Ok(eap(&posterior, &quad, matrix))
}
