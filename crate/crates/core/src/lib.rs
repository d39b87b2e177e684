//! Topic modeling for pharmaceutical patent collections.
//!
//! Patents are turned into a semantically enriched document-term matrix
//! (TF-IDF with bigram phrases, then embedding-neighborhood weighting),
//! factorized with NMF into document-topic `H` and topic-word `W`, and
//! summarized per inventor, company and molecule. A JSON HTTP API serves the
//! persisted model.

pub mod correlation;
pub mod corpus;
pub mod error;
pub mod factorization;
pub mod pipeline;
pub mod representation;
pub mod server;
pub mod store;

pub use error::{Error, Result};
