//! Directed-graph node classification with scaled adjacency matrices.

pub mod dense;
pub mod error;
pub mod graph;
pub mod harness;
pub mod hermitian;
pub mod model;
pub mod nn;
pub mod scale;
pub mod util;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use graph::{DirectedGraph, NormalizedMatrix, SelfLoopPolicy, SparseMatrix};
