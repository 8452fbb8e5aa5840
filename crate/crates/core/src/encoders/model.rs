use super::bow::{BowKind, TfIdfModel};
use super::config::EncoderKind;
use super::neural;
use super::params::ParameterSet;
use crate::error::{Error, Result};

/// A trained classifier of any kind, ready for inference.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Neural { kind: EncoderKind, params: ParameterSet },
    Bow(TfIdfModel),
}

impl Classifier {
    pub fn neural(kind: EncoderKind, params: ParameterSet) -> Result<Self> {
        if kind.is_bow() {
            return Err(Error::Config(format!("{kind} is not a neural encoder")));
        }
        params.validate()?;
        if (kind == EncoderKind::Hierarchical) != params.sentence_lstm.is_some() {
            return Err(Error::Config(format!("parameters do not fit encoder {kind}")));
        }
        Ok(Classifier::Neural { kind, params })
    }

    pub fn kind(&self) -> EncoderKind {
        match self {
            Classifier::Neural { kind, .. } => *kind,
            Classifier::Bow(m) => match m.kind {
                BowKind::Single => EncoderKind::BowSingle,
                BowKind::Flattened => EncoderKind::BowFlattened,
            },
        }
    }

    pub fn n_e(&self) -> usize {
        match self {
            Classifier::Neural { params, .. } => params.n_e(),
            Classifier::Bow(m) => m.n_e(),
        }
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            Classifier::Neural { params, .. } => params.vocab_size(),
            Classifier::Bow(m) => m.vocab_size(),
        }
    }

    /// Class probabilities with dropout off.
    pub fn predict(&self, sentences: &[Vec<u32>]) -> Result<Vec<f64>> {
        match self {
            Classifier::Neural { kind, params } => neural::predict(*kind, sentences, params),
            Classifier::Bow(m) => m.predict(sentences),
        }
    }
}
