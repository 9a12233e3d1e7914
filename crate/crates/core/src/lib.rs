//! Structured retrieval over food-composition data.
//!
//! Natural-language questions are turned into metadata filters by an LLM
//! ([`filtergen`]), executed against an in-memory vector store ([`store`])
//! with a strict → loose → semantic fallback cascade, and scored against
//! ground truth with precision/recall/F1 ([`eval`]).

pub mod corpus;
pub mod embeddings;
pub mod eval;
pub mod filter;
pub mod filtergen;
pub mod store;
pub mod transport;
