//! The three-parameter logistic item characteristic curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::response::ResponseMatrix;
use crate::stats::{log_add_exp, log_sigmoid, sigmoid};

/// Item parameters: discrimination `a`, difficulty `b`, guessing `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItemParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ItemParams {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }
}

/// Partial derivatives of the success probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IccGradient {
    pub d_a: f64,
    pub d_b: f64,
    pub d_c: f64,
    pub d_theta: f64,
}

/// `P(correct | theta) = c + (1 - c) / (1 + exp(-a (theta - b)))`.
#[inline]
pub fn icc(theta: f64, item: &ItemParams) -> f64 {
    item.c + (1.0 - item.c) * sigmoid(item.a * (theta - item.b))
}

/// `(ln P, ln(1 - P))`, evaluated without forming `1 - P` explicitly.
#[inline]
pub fn icc_log_probs(theta: f64, item: &ItemParams) -> (f64, f64) {
    let z = item.a * (theta - item.b);
    let ln_one_minus_c = (-item.c).ln_1p();
    let ln_fail = ln_one_minus_c + log_sigmoid(-z);
    let ln_success = if item.c > 0.0 {
        log_add_exp(item.c.ln(), ln_one_minus_c + log_sigmoid(z))
    } else {
        ln_one_minus_c + log_sigmoid(z)
    };
    (ln_success, ln_fail)
}

pub fn icc_gradient(theta: f64, item: &ItemParams) -> IccGradient {
    let s = sigmoid(item.a * (theta - item.b));
    let slope = (1.0 - item.c) * s * (1.0 - s);
    IccGradient {
        d_a: slope * (theta - item.b),
        d_b: -slope * item.a,
        d_c: 1.0 - s,
        d_theta: slope * item.a,
    }
}

/// Joint log-likelihood of a response matrix at fixed abilities:
/// `sum_ij U_ij ln P_ij + (1 - U_ij) ln(1 - P_ij)`.
pub fn log_likelihood(matrix: &ResponseMatrix, items: &[ItemParams], thetas: &[f64]) -> Result<f64> {
    if items.len() != matrix.n_items() {
        return Err(Error::Dimension {
            what: "item parameters vs matrix columns",
            expected: matrix.n_items(),
            found: items.len(),
        });
    }
    if thetas.len() != matrix.n_respondents() {
        return Err(Error::Dimension {
            what: "abilities vs matrix rows",
            expected: matrix.n_respondents(),
            found: thetas.len(),
        });
    }
    let mut total = 0.0;
    for (j, &theta) in thetas.iter().enumerate() {
        for (item, &u) in items.iter().zip(matrix.row(j)) {
            let (ln_p, ln_q) = icc_log_probs(theta, item);
            total += if u == 1 { ln_p } else { ln_q };
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        assert_eq!(icc(0.0, &ItemParams::new(1.0, 0.0, 0.0)), 0.5);
        assert!((icc(1.3, &ItemParams::new(2.7, 1.3, 0.2)) - 0.6).abs() < 1e-15);
        let positive = icc(2.07, &ItemParams::new(1.59, 0.0, 0.2));
        let negative = icc(2.07, &ItemParams::new(-1.57, 0.0, 0.2));
        assert!((positive - 0.9713).abs() < 5e-5, "{positive}");
        assert!((negative - 0.2299).abs() < 5e-5, "{negative}");
    }

    #[test]
    fn gradient_reference_points() {
        let g = icc_gradient(0.7, &ItemParams::new(1.3, 0.7, 0.0));
        assert_eq!(g.d_c, 0.5);
        assert_eq!(g.d_theta, -g.d_b);
    }

    #[test]
    fn single_cell_likelihood() {
        let m = ResponseMatrix::new(vec!["r".into()], vec!["i".into()], vec![1]).unwrap();
        let ll = log_likelihood(&m, &[ItemParams::new(1.0, 0.0, 0.0)], &[0.0]).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-15);
        assert!(log_likelihood(&m, &[], &[0.0]).is_err());
    }

    #[test]
    fn log_probs_match_direct_form() {
        for &(theta, a, b, c) in &[(0.3, 1.2, -0.4, 0.1), (-3.0, -2.0, 1.0, 0.0), (4.0, 3.5, -4.0, 0.45)] {
            let item = ItemParams::new(a, b, c);
            let p = icc(theta, &item);
            let (lp, lq) = icc_log_probs(theta, &item);
            assert!((lp - p.ln()).abs() < 1e-12);
            let fail = (1.0 - c) / (1.0 + f64::exp(a * (theta - b)));
            assert!((lq - fail.ln()).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn bounded_and_midpoint(theta in -6.0..6.0f64, a in -4.0..4.0f64, b in -4.0..4.0f64, c in 0.0..0.5f64) {
            let item = ItemParams::new(a, b, c);
            let p = icc(theta, &item);
            prop_assert!(p > c && p < 1.0);
            prop_assert!((icc(b, &item) - (1.0 + c) / 2.0).abs() <= 1e-15);
        }

        #[test]
        fn monotone_in_theta(t1 in -4.0..4.0f64, dt in 0.01..2.0f64, a in 0.05..4.0f64, b in -4.0..4.0f64, c in 0.0..0.5f64) {
            let up = ItemParams::new(a, b, c);
            let down = ItemParams::new(-a, b, c);
            prop_assert!(icc(t1 + dt, &up) > icc(t1, &up));
            prop_assert!(icc(t1 + dt, &down) < icc(t1, &down));
            let flat = ItemParams::new(0.0, b, c);
            prop_assert_eq!(icc(t1, &flat), icc(t1 + dt, &flat));
        }

        #[test]
        fn theta_and_b_partials_are_opposite(theta in -5.0..5.0f64, a in -4.0..4.0f64, b in -4.0..4.0f64, c in 0.0..0.5f64) {
            let g = icc_gradient(theta, &ItemParams::new(a, b, c));
            prop_assert_eq!(g.d_theta, -g.d_b);
        }
    }
}
