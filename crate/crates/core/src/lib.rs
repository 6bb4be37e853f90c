//! Explaining black-box binary classifiers with item response theory.
//!
//! A pool of classifiers answers every instance of a held-out test split; the
//! resulting correct/incorrect matrix is fitted with the three-parameter
//! logistic model, and the per-instance item parameters together with a
//! target model's ability yield reliability verdicts and dataset diagnostics.

pub mod analysis;
pub mod dataset;
pub mod error;
pub mod irt;
pub mod learners;
pub mod pipeline;
pub mod response;
pub mod seed;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
