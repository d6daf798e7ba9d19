//! Learning distribution-equivalence patterns of linear acyclic models whose
//! disturbances mix Gaussian and non-Gaussian distributions.

pub mod depfind;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod pc;
pub mod pclingam;
pub mod stats;
pub mod synth;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use graph::{MixedGraph, SepsetMap};
