//! Intent classification for short social-media messages.
//!
//! The crate covers the whole pipeline: corpus ingestion, lexicon filtering and
//! near-duplicate removal, crowd-label aggregation, text normalization, word2vec
//! embedding I/O, a sentence CNN whose fully connected activations ("CNN codes")
//! feed a multinomial logistic regression, five baseline schemes, stratified
//! k-fold evaluation and LDA topic summaries of predicted categories.

pub mod classify;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod features;
pub mod nnet;
pub mod seed;
pub mod synth;
pub mod textproc;
pub mod topics;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
