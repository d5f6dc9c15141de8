//! Corpus-based entity set expansion.
//!
//! Given a handful of seed entities and a mention-annotated corpus, the engine
//! generates auxiliary "rival" sets that are related to, but distinct from, the
//! target class, and then expands the target and the rival sets together using
//! context features that separate them.
//!
//! The pipeline is split into:
//!
//! - [`corpus`]: loading the annotated corpus, vocabulary and entity catalog.
//! - [`embedding`]: joint local/global context embeddings, retrieval, centroids.
//! - [`context_index`]: skip-gram features, flexgram normalisation, TF-IDF weights.
//! - [`auxgen`]: rival set generation by clustering and parallel offsets.
//! - [`coexpan`]: contrastive feature selection and multi-set co-expansion.
//! - [`evalkit`]: AP@k / MAP@k.
//! - [`cli`]: the `coexpand` command line front end.

pub mod auxgen;
pub mod cli;
pub mod coexpan;
pub mod config;
pub mod context_index;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod evalkit;
pub mod rng;
pub mod synthetic;

pub use error::{Error, Result};
