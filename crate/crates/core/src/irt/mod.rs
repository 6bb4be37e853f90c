//! Three-parameter logistic IRT: the item characteristic curve, marginal
//! maximum likelihood fitting, and ability estimation.

mod fit;
pub mod io;
mod model;

pub use fit::{
    estimate_abilities, fit_3pl, log_prior, AbilityEstimate, Degeneracy, FitConfig, FitResult,
    PriorConfig, Quadrature,
};
pub use model::{icc, icc_gradient, icc_log_probs, log_likelihood, IccGradient, ItemParams};
