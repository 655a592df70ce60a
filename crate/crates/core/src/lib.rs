//! Explanations for graph neural network predictions.
//!
//! The crate trains small GCNs and their companions and explains them in
//! three ways:
//!
//! * **structural**: random walk with restart over the column-normalized
//!   adjacency for node predictions ([`structural::explain_node`]), and
//!   learned edge masks for graph predictions ([`structural::explain_graph`]);
//! * **feature attribution**: Shapley values on an MLP distilled from the GCN
//!   ([`distill`], [`attribution`]);
//! * **example-based**: nearest same-class and different-class reference
//!   graphs with their own explanations ([`reference`]).

pub mod attribution;
pub mod distill;
mod error;
pub mod gnn;
pub mod graph;
pub mod nn;
pub mod reference;
pub mod structural;

pub use error::{Error, Result};
