//! Manufacturing service capability inference on service knowledge graphs.
//!
//! The pipeline masks a target service, balances classes by synthesizing
//! manufacturer nodes (SENG), builds manufacturer features from neighbor
//! service names (paragraph vectors reduced to the plane), and trains a
//! GraphSAGE or GCN node classifier. A link-prediction baseline and the
//! evaluation sweeps live alongside.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod features;
pub mod gnn;
pub mod graph;
pub mod seng;

pub use error::{Error, Result};
