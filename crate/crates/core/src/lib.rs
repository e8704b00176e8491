//! Time-split versus random-split evaluation of binary tabular predictors.

pub mod data;
pub mod error;
pub mod evaluator;
pub mod filter;
pub mod importance;
pub mod leakage;
pub mod learners;
pub mod metrics;
pub mod rng;
pub mod split;
pub mod stats;

pub use error::{Error, Result};
