//! Tool retrieval for LLM agents.
//!
//! A first-pass lexical, vector or hybrid search picks seed tools; a
//! depth-first walk over the tool dependency graph then pulls in what each
//! seed needs, and the result is assembled into one deduplicated, capped list.
//! The [`eval`] module carries the benchmark harness used to compare retrievers.

pub mod embedding;
pub mod eval;
pub mod graph;
pub mod http;
pub mod lexical;
pub mod ranking;
pub mod retrieval;
pub mod vector;

pub use ranking::{IndexError, ScoredDoc};
