//! Personalized-PageRank propagation over heterogeneous news/author graphs,
//! kept current under edge updates, and a propagation-based classifier.

pub mod error;
pub mod features;
pub mod graph;
pub mod model;
pub mod propagate;
pub mod sparse;
pub mod synth;
pub mod textgraph;

pub use error::{Error, Result};
pub use graph::{HeteroGraph, Label, Relation};
pub use propagate::{DynamicPropagation, MixedWeights, PropagationMatrix, Scheme};
pub use sparse::{SparseMatrix, StochasticMatrix};
