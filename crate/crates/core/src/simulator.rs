//! Synthetic response generation from known 3PL parameters, and scoring of
//! how well a fit recovers them.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irt::{icc, FitResult, ItemParams};
use crate::response::ResponseMatrix;
use crate::seed::derived_rng;
use crate::stats::{pearson, rmse};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaDistribution {
    StandardNormal,
    Fixed { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub n_respondents: usize,
    pub n_items: usize,
    pub a_range: (f64, f64),
    /// Discriminations with `|a|` below this are redrawn.
    pub a_abs_min: f64,
    pub b_range: (f64, f64),
    pub c_range: (f64, f64),
    pub theta: ThetaDistribution,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            n_respondents: 150,
            n_items: 100,
            a_range: (-2.0, 2.5),
            a_abs_min: 0.3,
            b_range: (-2.5, 2.5),
            c_range: (0.0, 0.3),
            theta: ThetaDistribution::StandardNormal,
            seed: 0,
        }
    }
}

/// Clamp box for generated parameters; matches the fitting defaults.
pub const PARAM_BOUND: f64 = 4.0;
pub const C_MAX: f64 = 0.5;

impl SimSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let in_box = |(lo, hi): (f64, f64)| lo <= hi && lo >= -PARAM_BOUND && hi <= PARAM_BOUND;
        if self.n_respondents == 0 || self.n_items == 0 {
            return Err(Error::invalid("respondent and item counts must be positive"));
        }
        if !in_box(self.a_range) || !in_box(self.b_range) {
            return Err(Error::invalid(format!(
                "a and b ranges must be ordered and lie within [-{PARAM_BOUND}, {PARAM_BOUND}]"
            )));
        }
        let (c_lo, c_hi) = self.c_range;
        if !(c_lo >= 0.0 && c_lo <= c_hi && c_hi < C_MAX) {
            return Err(Error::invalid(format!("c range must be ordered and lie within [0, {C_MAX})")));
        }
        let reach = self.a_range.0.abs().max(self.a_range.1.abs());
        if self.a_abs_min < 0.0 || (self.a_abs_min > 0.0 && self.a_abs_min > reach) {
            return Err(Error::invalid("a_abs_min excludes the whole a range"));
        }
        if let ThetaDistribution::Fixed { value } = self.theta {
            if !value.is_finite() {
                return Err(Error::invalid("fixed theta must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub items: Vec<ItemParams>,
    pub thetas: Vec<f64>,
    pub matrix: ResponseMatrix,
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Draws parameters and abilities, then each cell as
/// `Bernoulli(icc(theta_j, item_i))`.
pub fn simulate(spec: &SimSpec) -> Result<Simulation> {
    spec.validate()?;
    let mut rng = derived_rng(spec.seed, "simulate/items");
    let items: Vec<ItemParams> = (0..spec.n_items)
        .map(|_| {
            let a = loop {
                let a = uniform(&mut rng, spec.a_range);
                if a.abs() >= spec.a_abs_min {
                    break a;
                }
            };
            let b = uniform(&mut rng, spec.b_range);
            let c = uniform(&mut rng, spec.c_range);
            ItemParams { a, b, c }
        })
        .collect();

    let mut theta_rng = derived_rng(spec.seed, "simulate/thetas");
    let thetas: Vec<f64> = (0..spec.n_respondents)
        .map(|_| match spec.theta {
            ThetaDistribution::StandardNormal => StandardNormal.sample(&mut theta_rng),
            ThetaDistribution::Fixed { value } => value,
        })
        .collect();

    let cells: Vec<u8> = thetas
        .par_iter()
        .enumerate()
        .flat_map_iter(|(j, &theta)| {
            let mut rng = derived_rng(spec.seed, &format!("simulate/respondent/{j}"));
            items
                .iter()
                .map(move |item| u8::from(rng.random_bool(icc(theta, item))))
                .collect::<Vec<_>>()
        })
        .collect();

    let width = spec.n_respondents.max(2).to_string().len().max(3);
    let respondent_ids = (0..spec.n_respondents).map(|j| format!("r{j:0width$}")).collect();
    let width = spec.n_items.to_string().len().max(3);
    let item_ids = (0..spec.n_items).map(|i| format!("i{i:0width$}")).collect();
    let matrix = ResponseMatrix::new(respondent_ids, item_ids, cells)?;
    Ok(Simulation { items, thetas, matrix })
}

/// One probability decile of the cell-level calibration check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecileCheck {
    pub cells: usize,
    pub mean_probability: f64,
    pub mean_response: f64,
    /// Binomial standard error of the mean response.
    pub sigma: f64,
    pub within_3_sigma: bool,
}

/// Groups all cells into ten equal-size bins by their true success
/// probability and compares the empirical mean response with the mean
/// probability in each bin.
pub fn decile_calibration(sim: &Simulation) -> Vec<DecileCheck> {
    let m = &sim.matrix;
    let mut cells: Vec<(f64, u8)> = Vec::with_capacity(m.n_respondents() * m.n_items());
    for (j, &theta) in sim.thetas.iter().enumerate() {
        for (item, &u) in sim.items.iter().zip(m.row(j)) {
            cells.push((icc(theta, item), u));
        }
    }
    cells.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = cells.len();
    (0..10)
        .filter_map(|d| {
            let group = &cells[d * n / 10..(d + 1) * n / 10];
            if group.is_empty() {
                return None;
            }
            let k = group.len() as f64;
            let mean_probability = group.iter().map(|c| c.0).sum::<f64>() / k;
            let mean_response = group.iter().map(|c| f64::from(c.1)).sum::<f64>() / k;
            let sigma = group.iter().map(|c| c.0 * (1.0 - c.0)).sum::<f64>().sqrt() / k;
            Some(DecileCheck {
                cells: group.len(),
                mean_probability,
                mean_response,
                sigma,
                within_3_sigma: (mean_response - mean_probability).abs() <= 3.0 * sigma + 1e-12,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryFloors {
    /// Items with `|a_true|` at least this enter the sign-agreement rate.
    pub sign_floor: f64,
    /// Items with `|a_true|` at least this enter the filtered `b` correlation.
    pub difficulty_floor: f64,
}

impl Default for RecoveryFloors {
    fn default() -> Self {
        Self {
            sign_floor: 0.75,
            difficulty_floor: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub corr_a: f64,
    pub corr_b: f64,
    pub corr_b_filtered: f64,
    pub corr_c: f64,
    pub corr_theta: f64,
    pub sign_agreement_a: f64,
    pub rmse_a: f64,
    pub rmse_b: f64,
    pub rmse_c: f64,
    pub rmse_theta: f64,
}

pub fn score_recovery(
    true_items: &[ItemParams],
    true_thetas: &[f64],
    fit: &FitResult,
    floors: RecoveryFloors,
) -> Result<RecoveryReport> {
    if true_items.len() != fit.items.len() {
        return Err(Error::Dimension {
            what: "true vs fitted items",
            expected: true_items.len(),
            found: fit.items.len(),
        });
    }
    if true_thetas.len() != fit.abilities.len() {
        return Err(Error::Dimension {
            what: "true vs fitted abilities",
            expected: true_thetas.len(),
            found: fit.abilities.len(),
        });
    }
    let col = |items: &[ItemParams], f: fn(&ItemParams) -> f64| items.iter().map(f).collect::<Vec<_>>();
    let (ta, tb, tc) = (col(true_items, |p| p.a), col(true_items, |p| p.b), col(true_items, |p| p.c));
    let (fa, fb, fc) = (col(&fit.items, |p| p.a), col(&fit.items, |p| p.b), col(&fit.items, |p| p.c));
    let fitted_theta: Vec<f64> = fit.abilities.iter().map(|a| a.theta).collect();
    let corr = |x: &[f64], y: &[f64]| pearson(x, y).unwrap_or(0.0);

    let keep_b: Vec<usize> = (0..ta.len()).filter(|&i| ta[i].abs() >= floors.difficulty_floor).collect();
    let pick = |v: &[f64]| keep_b.iter().map(|&i| v[i]).collect::<Vec<_>>();
    let signed: Vec<usize> = (0..ta.len()).filter(|&i| ta[i].abs() >= floors.sign_floor).collect();
    let agree = signed.iter().filter(|&&i| ta[i].signum() == fa[i].signum() && fa[i] != 0.0).count();

    Ok(RecoveryReport {
        corr_a: corr(&ta, &fa),
        corr_b: corr(&tb, &fb),
        corr_b_filtered: corr(&pick(&tb), &pick(&fb)),
        corr_c: corr(&tc, &fc),
        corr_theta: corr(true_thetas, &fitted_theta),
        sign_agreement_a: if signed.is_empty() { 0.0 } else { agree as f64 / signed.len() as f64 },
        rmse_a: rmse(&ta, &fa),
        rmse_b: rmse(&tb, &fb),
        rmse_c: rmse(&tc, &fc),
        rmse_theta: rmse(true_thetas, &fitted_theta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irt::{AbilityEstimate, Degeneracy};

    fn fit_from(items: Vec<ItemParams>, thetas: &[f64]) -> FitResult {
        FitResult {
            item_ids: (0..items.len()).map(|i| i.to_string()).collect(),
            respondent_ids: (0..thetas.len()).map(|j| j.to_string()).collect(),
            item_flags: vec![Degeneracy::None; items.len()],
            items,
            abilities: thetas
                .iter()
                .map(|&theta| AbilityEstimate { theta, degenerate: Degeneracy::None })
                .collect(),
            log_likelihood: 0.0,
            trace: vec![],
            iterations: 0,
            converged: true,
        }
    }

    #[test]
    fn constant_probability_matches_binomial_bound() {
        let spec = SimSpec {
            n_respondents: 200,
            n_items: 50,
            a_range: (0.0, 0.0),
            a_abs_min: 0.0,
            c_range: (0.49, 0.49),
            ..SimSpec::default()
        };
        let sim = simulate(&spec).unwrap();
        let n = 10_000.0;
        let p = 0.49 + 0.51 * 0.5;
        assert!((p - 0.745f64).abs() < 1e-12);
        let mean = sim.matrix.column_sums().iter().sum::<usize>() as f64 / n;
        let sigma = (p * (1.0 - p) / n).sqrt();
        assert!((mean - p).abs() <= 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn high_ability_rows_mostly_correct() {
        let spec = SimSpec {
            n_respondents: 20,
            n_items: 200,
            a_range: (0.5, 2.5),
            b_range: (-2.5, 0.0),
            theta: ThetaDistribution::Fixed { value: 4.0 },
            ..SimSpec::default()
        };
        let sim = simulate(&spec).unwrap();
        // icc(4; a >= 0.5, b <= 0) >= sigmoid(2) ~ 0.88 per cell; the average
        // over the drawn items exceeds 0.95.
        let expected: f64 = sim.items.iter().map(|it| icc(4.0, it)).sum::<f64>() / 200.0;
        assert!(expected >= 0.95, "{expected}");
        for j in 0..20 {
            let mean = sim.matrix.row(j).iter().map(|&u| f64::from(u)).sum::<f64>() / 200.0;
            assert!(mean >= 0.95 - 3.0 * (0.05 * 0.95 / 200.0f64).sqrt(), "row {j}: {mean}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = simulate(&SimSpec::with_seed(3)).unwrap();
        let b = simulate(&SimSpec::with_seed(3)).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.items, b.items);
        let c = simulate(&SimSpec::with_seed(4)).unwrap();
        assert_ne!(a.matrix, c.matrix);
        assert!(a.items.iter().all(|it| it.a.abs() >= 0.3));
    }

    #[test]
    fn rejects_invalid_specs() {
        let spec = SimSpec { c_range: (1.0, 1.0), ..SimSpec::default() };
        assert!(simulate(&spec).is_err());
        let spec = SimSpec { a_range: (2.0, -2.0), ..SimSpec::default() };
        assert!(spec.validate().is_err());
        let spec = SimSpec { b_range: (-5.0, 0.0), ..SimSpec::default() };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn deciles_are_calibrated() {
        let sim = simulate(&SimSpec::with_seed(9)).unwrap();
        let checks = decile_calibration(&sim);
        assert_eq!(checks.len(), 10);
        assert_eq!(checks.iter().map(|c| c.cells).sum::<usize>(), 15_000);
        assert!(checks.iter().all(|c| c.within_3_sigma), "{checks:?}");
    }

    #[test]
    fn identity_and_sign_flip() {
        let sim = simulate(&SimSpec::with_seed(1)).unwrap();
        let report = score_recovery(&sim.items, &sim.thetas, &fit_from(sim.items.clone(), &sim.thetas), RecoveryFloors::default()).unwrap();
        assert!((report.corr_a - 1.0).abs() < 1e-12);
        assert!((report.corr_theta - 1.0).abs() < 1e-12);
        assert!((report.corr_b_filtered - 1.0).abs() < 1e-12);
        assert_eq!(report.rmse_c, 0.0);
        assert_eq!(report.sign_agreement_a, 1.0);

        let flipped: Vec<ItemParams> = sim.items.iter().map(|p| ItemParams { a: -p.a, ..*p }).collect();
        let report = score_recovery(&sim.items, &sim.thetas, &fit_from(flipped, &sim.thetas), RecoveryFloors::default()).unwrap();
        assert_eq!(report.sign_agreement_a, 0.0);

        assert!(score_recovery(&sim.items[1..], &sim.thetas, &fit_from(sim.items.clone(), &sim.thetas), RecoveryFloors::default()).is_err());
    }

    #[test]
    fn recovery_symmetric_under_item_permutation() {
        let sim = simulate(&SimSpec { n_items: 30, n_respondents: 40, ..SimSpec::with_seed(2) }).unwrap();
        let noisy: Vec<ItemParams> = sim.items.iter().enumerate().map(|(i, p)| ItemParams { a: p.a + 0.1 * (i % 3) as f64, b: p.b - 0.05 * (i % 5) as f64, c: p.c }).collect();
        let base = score_recovery(&sim.items, &sim.thetas, &fit_from(noisy.clone(), &sim.thetas), RecoveryFloors::default()).unwrap();
        let order: Vec<usize> = (0..30).rev().collect();
        let t2: Vec<ItemParams> = order.iter().map(|&i| sim.items[i]).collect();
        let f2: Vec<ItemParams> = order.iter().map(|&i| noisy[i]).collect();
        let perm = score_recovery(&t2, &sim.thetas, &fit_from(f2, &sim.thetas), RecoveryFloors::default()).unwrap();
        assert!((base.corr_a - perm.corr_a).abs() < 1e-12);
        assert!((base.corr_b_filtered - perm.corr_b_filtered).abs() < 1e-12);
        assert!((base.rmse_c - perm.rmse_c).abs() < 1e-12);
        assert_eq!(base.sign_agreement_a, perm.sign_agreement_a);
    }
}
