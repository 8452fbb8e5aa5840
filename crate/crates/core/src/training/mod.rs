//! Mini-batch training with AdaDelta, dropout and early stopping.

mod checkpoint;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta, FORMAT_VERSION,
    MAGIC,
};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{make_batches, LabelSet, LabeledDialogue, Vocabulary};
use crate::encoders::{
    bow_train, example_loss_and_grad, BowKind, BowTrainConfig, Classifier, EncoderKind, ModelConfig, ParameterSet,
};
use crate::error::{Error, Result};
use crate::evaluation::evaluate;
use crate::nn::{clip_global_norm, AdaDeltaState, Mode, Parameters, RngStream, DEFAULT_EPSILON, DEFAULT_RHO};

/// RNG stream used for parameter initialization.
pub const INIT_STREAM: u64 = 1 << 33;
const DROPOUT_STREAM: u64 = 1 << 34;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub batch_size: usize,
    pub rho: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub clip_norm: Option<f64>,
}

impl TrainConfig {
    pub fn new(model: ModelConfig) -> Self {
        Self {
            model,
            batch_size: 128,
            rho: DEFAULT_RHO,
            epsilon: DEFAULT_EPSILON,
            max_epochs: 50,
            patience: 3,
            clip_norm: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.model.seed
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Config(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("clip norm must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_error: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainLog {
    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        self.epochs
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect()
    }

    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs
            .iter()
            .fold(None, |best: Option<&EpochRecord>, r| match best {
                Some(b) if b.valid_error <= r.valid_error => Some(b),
                _ => Some(r),
            })
    }
}

/// Tracks the best validation error; the earliest epoch wins ties.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            stale: 0,
        }
    }

    /// Records an epoch; returns true when it is the new best.
    pub fn observe(&mut self, epoch: usize, error: f64) -> bool {
        match self.best {
            Some((_, b)) if error >= b => {
                self.stale += 1;
                false
            }
            _ => {
                self.best = Some((epoch, error));
                self.stale = 0;
                true
            }
        }
    }

    pub fn should_stop(&self) -> bool {
        self.stale >= self.patience
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

pub struct TrainingData<'a> {
    pub train: &'a [LabeledDialogue],
    pub valid: &'a [LabeledDialogue],
    pub vocab: &'a Vocabulary,
    pub labels: &'a LabelSet,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: TrainLog,
}

fn check_data(config: &TrainConfig, data: &TrainingData<'_>) -> Result<()> {
    config.validate()?;
    let m = &config.model;
    if data.vocab.len() != m.vocab_size {
        return Err(Error::Config(format!(
            "vocabulary has {} entries, model expects {}",
            data.vocab.len(),
            m.vocab_size
        )));
    }
    if data.labels.len() != m.n_e {
        return Err(Error::Config(format!(
            "label set has {} classes, model expects {}",
            data.labels.len(),
            m.n_e
        )));
    }
    if data.train.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    if data.valid.is_empty() {
        return Err(Error::Data("validation split is empty".into()));
    }
    for d in data.train.iter().chain(data.valid) {
        if d.label >= m.n_e {
            return Err(Error::Label(format!("label {} outside {} classes", d.label, m.n_e)));
        }
    }
    Ok(())
}

pub fn train(config: &TrainConfig, data: &TrainingData<'_>) -> Result<TrainOutcome> {
    train_with(config, data, |_| {})
}

/// Trains and returns the checkpoint with the lowest validation error.
/// `on_epoch` sees each record as it is produced.
pub fn train_with(
    config: &TrainConfig,
    data: &TrainingData<'_>,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    check_data(config, data)?;
    if config.model.encoder.is_bow() {
        return train_bow(config, data, on_epoch);
    }
    let kind = config.model.encoder;
    let seed = config.seed();
    let gamma = config.model.gamma;
    let mut params = ParameterSet::init(&config.model, &mut RngStream::with_stream(seed, INIT_STREAM))?;
    let mut grads = params.zeros_like();
    let mut optimizer = AdaDeltaState::new(&params, config.rho, config.epsilon)?;
    let mut rng = RngStream::with_stream(seed, DROPOUT_STREAM);

    let meta = |epoch: usize, error: f64, rng: &RngStream| CheckpointMeta {
        config: config.clone(),
        vocab_hash: data.vocab.content_hash(),
        labels_hash: data.labels.content_hash(),
        label_names: data.labels.names().to_vec(),
        epoch,
        best_valid_error: error,
        rng: rng.state(),
    };

    if config.max_epochs == 0 {
        let classifier = Classifier::neural(kind, params)?;
        let error = 1.0 - evaluate(&classifier, data.valid, data.labels)?.p_at_1;
        return Ok(TrainOutcome {
            checkpoint: Checkpoint {
                meta: meta(0, error, &rng),
                classifier,
            },
            log: TrainLog::default(),
        });
    }

    let mut log = TrainLog::default();
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best: Option<Checkpoint> = None;
    let mut batch_index = 0usize;
    for epoch in 1..=config.max_epochs {
        let started = Instant::now();
        let mut loss_sum = 0.0;
        for batch in make_batches(data.train, config.batch_size, seed, epoch as u64) {
            grads.zero();
            let weight = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for i in 0..batch.len() {
                let sentences = batch.sentences(i);
                batch_loss += example_loss_and_grad(
                    kind,
                    &sentences,
                    batch.labels[i],
                    &params,
                    gamma,
                    &mut rng,
                    Mode::Train,
                    weight,
                    &mut grads,
                )?;
            }
            if !batch_loss.is_finite() || !grads.all_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss or gradient at batch {batch_index} (epoch {epoch})"
                )));
            }
            loss_sum += batch_loss;
            if let Some(max_norm) = config.clip_norm {
                clip_global_norm(&mut grads, max_norm);
            }
            optimizer.step(&mut params, &grads)?;
            batch_index += 1;
        }
        let classifier = Classifier::neural(kind, params.clone())?;
        let valid_error = 1.0 - evaluate(&classifier, data.valid, data.labels)?.p_at_1;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / data.train.len() as f64,
            valid_error,
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        log.epochs.push(record);
        if stopper.observe(epoch, valid_error) {
            best = Some(Checkpoint {
                meta: meta(epoch, valid_error, &rng),
                classifier,
            });
        }
        if stopper.should_stop() {
            break;
        }
    }
    Ok(TrainOutcome {
        checkpoint: best.expect("at least one epoch ran"),
        log,
    })
}

fn train_bow(
    config: &TrainConfig,
    data: &TrainingData<'_>,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    let kind = if config.model.encoder == EncoderKind::BowSingle {
        BowKind::Single
    } else {
        BowKind::Flattened
    };
    let bow_config = BowTrainConfig {
        batch_size: config.batch_size,
        seed: config.seed(),
        ..BowTrainConfig::default()
    };
    let started = Instant::now();
    let model = bow_train(data.train, kind, config.model.vocab_size, config.model.n_e, &bow_config)?;
    let train_loss = {
        let features: Vec<_> = data
            .train
            .iter()
            .map(|d| crate::encoders::bow_featurize(&d.sentences, kind, &model.idf))
            .collect();
        let batch: Vec<_> = features.iter().zip(data.train).map(|(x, d)| (x, d.label)).collect();
        model.loss_and_grad(&batch)?.0
    };
    let classifier = Classifier::Bow(model);
    let valid_error = 1.0 - evaluate(&classifier, data.valid, data.labels)?.p_at_1;
    let record = EpochRecord {
        epoch: bow_config.epochs,
        train_loss,
        valid_error,
        seconds: started.elapsed().as_secs_f64(),
    };
    on_epoch(&record);
    let checkpoint = Checkpoint {
        meta: CheckpointMeta {
            config: config.clone(),
            vocab_hash: data.vocab.content_hash(),
            labels_hash: data.labels.content_hash(),
            label_names: data.labels.names().to_vec(),
            epoch: bow_config.epochs,
            best_valid_error: valid_error,
            rng: RngStream::with_stream(config.seed(), 0).state(),
        },
        classifier,
    };
    Ok(TrainOutcome {
        checkpoint,
        log: TrainLog { epochs: vec![record] },
    })
}
