use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which dialogue encoder (or bag-of-words baseline) a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EncoderKind {
    /// Reply sentence only.
    #[serde(rename = "s-lstm")]
    Single,
    /// All sentences concatenated into one token sequence.
    #[serde(rename = "f-lstm")]
    Flattened,
    /// Word-level LSTM per sentence, then a sentence-level LSTM.
    #[serde(rename = "h-lstm")]
    Hierarchical,
    #[serde(rename = "s-bow")]
    BowSingle,
    #[serde(rename = "f-bow")]
    BowFlattened,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 5] = [
        EncoderKind::Single,
        EncoderKind::Flattened,
        EncoderKind::Hierarchical,
        EncoderKind::BowSingle,
        EncoderKind::BowFlattened,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderKind::Single => "s-lstm",
            EncoderKind::Flattened => "f-lstm",
            EncoderKind::Hierarchical => "h-lstm",
            EncoderKind::BowSingle => "s-bow",
            EncoderKind::BowFlattened => "f-bow",
        }
    }

    pub fn is_bow(self) -> bool {
        matches!(self, EncoderKind::BowSingle | EncoderKind::BowFlattened)
    }

    /// Whether the model sees context sentences, not just the reply.
    pub fn uses_context(self) -> bool {
        !matches!(self, EncoderKind::Single | EncoderKind::BowSingle)
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EncoderKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown encoder '{s}' (expected one of s-lstm, f-lstm, h-lstm, s-bow, f-bow)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_x: usize,
    pub n_h: usize,
    pub n_e: usize,
    pub vocab_size: usize,
    pub gamma: f64,
    pub encoder: EncoderKind,
    pub seed: u64,
}

impl ModelConfig {
    pub const DEFAULT_DIM: usize = 384;
    pub const DEFAULT_GAMMA: f64 = 0.5;

    pub fn new(encoder: EncoderKind, vocab_size: usize, n_e: usize) -> Self {
        Self {
            n_x: Self::DEFAULT_DIM,
            n_h: Self::DEFAULT_DIM,
            n_e,
            vocab_size,
            gamma: Self::DEFAULT_GAMMA,
            encoder,
            seed: 0,
        }
    }

    pub fn with_dims(mut self, n_x: usize, n_h: usize) -> Self {
        self.n_x = n_x;
        self.n_h = n_h;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_x", self.n_x),
            ("n_h", self.n_h),
            ("n_e", self.n_e),
            ("vocab_size", self.vocab_size),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma {} outside [0, 1)", self.gamma)));
        }
        Ok(())
    }
}
