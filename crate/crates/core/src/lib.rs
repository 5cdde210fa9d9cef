//! Knowledge-graph embedding toolkit: triple datasets, ontology validation,
//! benchmark sampling, six scoring models, training and filtered link-prediction
//! evaluation.

pub mod cli;
pub mod error;
pub mod eval;
pub mod io;
pub mod kg;
pub mod models;
pub mod ontology;
pub mod rng;
pub mod sampler;
pub mod training;

pub use error::{Error, Result};
