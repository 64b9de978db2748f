//! Discrete Bayesian network toolkit: data preparation, association
//! networks, structure learning with bootstrap averaging, parameter fitting,
//! exact and approximate inference, and interventional policy search.

pub mod assoc;
pub mod dataset;
pub mod decision;
mod error;
pub mod fit;
pub mod graph;
pub mod infer;
pub mod learn;
pub mod score;

pub use error::{Error, Result};
