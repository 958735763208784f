//! Bot-account retrieval by similarity search over content, network and
//! fused embeddings of a communication graph.

pub mod cli;
pub mod content;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod graph;
pub mod ingest;
pub mod knn;
pub mod linalg;
pub mod network;
pub mod randstring;
pub mod service;
pub mod text;

pub use error::{Error, Result};
