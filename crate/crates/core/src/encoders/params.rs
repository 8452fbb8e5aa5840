use serde::{Deserialize, Serialize};

use super::config::{EncoderKind, ModelConfig};
use crate::error::{Error, Result};
use crate::nn::{LstmParams, Matrix, Parameters, RngStream};

/// Half-width of the uniform initialization interval.
pub const INIT_SCALE: f64 = 0.08;
pub const FORGET_BIAS_INIT: f64 = 1.0;

/// Every trainable tensor of a neural dialogue classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    /// One row per vocabulary id (PAD and UNK included), `vocab_size × n_x`.
    pub embeddings: Matrix,
    /// Word-level LSTM, shared by all sentences.
    pub word_lstm: LstmParams,
    /// Sentence-level LSTM over sentence representations (hierarchical only).
    pub sentence_lstm: Option<LstmParams>,
    pub classifier_w: Matrix,
    pub classifier_b: Vec<f64>,
}

impl ParameterSet {
    pub fn zeros(config: &ModelConfig) -> Self {
        Self {
            embeddings: Matrix::zeros(config.vocab_size, config.n_x),
            word_lstm: LstmParams::zeros(config.n_x, config.n_h),
            sentence_lstm: (config.encoder == EncoderKind::Hierarchical)
                .then(|| LstmParams::zeros(config.n_h, config.n_h)),
            classifier_w: Matrix::zeros(config.n_e, config.n_h),
            classifier_b: vec![0.0; config.n_e],
        }
    }

    /// Standard initialization: every weight and embedding uniform in
    /// `[-INIT_SCALE, INIT_SCALE]`, biases zero except forget gates.
    pub fn init(config: &ModelConfig, rng: &mut RngStream) -> Result<Self> {
        Self::init_with_scale(config, INIT_SCALE, rng)
    }

    pub fn init_with_scale(config: &ModelConfig, scale: f64, rng: &mut RngStream) -> Result<Self> {
        config.validate()?;
        if config.encoder.is_bow() {
            return Err(Error::Config(format!(
                "{} is a bag-of-words model and has no neural parameters",
                config.encoder
            )));
        }
        let mut uniform = |rows, cols| Matrix::from_fn(rows, cols, |_, _| rng.uniform(-scale, scale));
        let embeddings = uniform(config.vocab_size, config.n_x);
        let classifier_w = uniform(config.n_e, config.n_h);
        let word_lstm = LstmParams::random(config.n_x, config.n_h, scale, FORGET_BIAS_INIT, rng);
        let sentence_lstm = (config.encoder == EncoderKind::Hierarchical)
            .then(|| LstmParams::random(config.n_h, config.n_h, scale, FORGET_BIAS_INIT, rng));
        Ok(Self {
            embeddings,
            word_lstm,
            sentence_lstm,
            classifier_w,
            classifier_b: vec![0.0; config.n_e],
        })
    }

    pub fn n_x(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn n_h(&self) -> usize {
        self.word_lstm.n_h()
    }

    pub fn n_e(&self) -> usize {
        self.classifier_b.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn validate(&self) -> Result<()> {
        self.word_lstm.validate()?;
        if self.word_lstm.n_x() != self.n_x() {
            return Err(Error::shape("word LSTM input size differs from embedding size"));
        }
        if let Some(s) = &self.sentence_lstm {
            s.validate()?;
            if s.n_x() != self.n_h() || s.n_h() != self.n_h() {
                return Err(Error::shape("sentence LSTM must be n_h × n_h"));
            }
        }
        if self.classifier_w.shape() != (self.n_e(), self.n_h()) {
            return Err(Error::shape("classifier weights must be n_e × n_h"));
        }
        Ok(())
    }

    /// `(name, shape)` in the same order as [`Parameters::tensors`].
    pub fn tensor_specs(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = vec![(
            "embeddings".to_string(),
            vec![self.embeddings.rows(), self.embeddings.cols()],
        )];
        out.extend(self.word_lstm.tensor_specs("word_lstm"));
        if let Some(s) = &self.sentence_lstm {
            out.extend(s.tensor_specs("sentence_lstm"));
        }
        out.push((
            "classifier_w".into(),
            vec![self.classifier_w.rows(), self.classifier_w.cols()],
        ));
        out.push(("classifier_b".into(), vec![self.classifier_b.len()]));
        out
    }
}

impl Parameters for ParameterSet {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut out = vec![self.embeddings.as_slice()];
        out.extend(self.word_lstm.tensors());
        if let Some(s) = &self.sentence_lstm {
            out.extend(s.tensors());
        }
        out.push(self.classifier_w.as_slice());
        out.push(&self.classifier_b);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.embeddings.as_mut_slice()];
        out.extend(self.word_lstm.tensors_mut());
        if let Some(s) = &mut self.sentence_lstm {
            out.extend(s.tensors_mut());
        }
        out.push(self.classifier_w.as_mut_slice());
        out.push(&mut self.classifier_b);
        out
    }
}
