//! Dialogue encoders, the softmax head, and bag-of-words baselines.

pub mod bow;
pub mod config;
pub mod model;
pub mod neural;
pub mod params;

pub use bow::{bow_featurize, bow_train, fit_idf, BowKind, BowTrainConfig, SparseVec, TfIdfModel};
pub use config::{EncoderKind, ModelConfig};
pub use model::Classifier;
pub use neural::{
    classifier_backward, classify, classify_traced, encode, encode_flattened, encode_hierarchical,
    encode_single, encode_traced, encoder_backward, example_loss_and_grad, predict, ClassifierTrace,
    DialogueRepresentation, EncodeTrace,
};
pub use params::ParameterSet;
