//! Missingness-avoiding learning: decision trees, sparse linear models and
//! tree ensembles that are penalized for relying on missing feature values at
//! prediction time, plus the data handling, evaluation and verification tools
//! around them.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod linear;
pub mod matrix;
pub mod model;
pub mod numeric;
pub mod oddc;
pub mod reliance;
pub(crate) mod rng;
pub mod tree;

pub use error::{Error, Result};
