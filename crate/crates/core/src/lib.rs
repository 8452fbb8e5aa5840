//! Emoji recommendation for multi-turn dialogues.
//!
//! Three LSTM dialogue encoders (reply-only, flattened and hierarchical)
//! feed a softmax classifier over a fixed emoji inventory. Bag-of-words
//! TF-IDF baselines, the corpus pipeline, AdaDelta training with early
//! stopping, and ranking metrics (P@k, MRR) round out the toolkit.

pub mod corpus;
pub mod encoders;
pub mod error;
pub mod evaluation;
pub mod nn;
pub mod training;

pub use error::{Error, Result};
