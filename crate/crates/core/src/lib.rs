//! Training-data toolkit for distilling a cross-encoder teacher into a
//! dense retriever: candidate-pool assembly, score normalization, negative
//! sampling strategies, score-diversity statistics, distillation losses
//! with analytic gradients, and a synthetic end-to-end training harness.

pub mod cli;
pub mod corpus;
pub mod diversity;
pub mod error;
pub mod harness;
pub mod io;
pub mod losses;
pub mod rng;
pub mod sampling;
pub mod scores;

pub use error::{Error, Result};
