//! `key = value` run configuration shared by every command.

use std::path::PathBuf;
use std::str::FromStr;

use emojirec::corpus::{CleanRules, FilterConfig, PreprocessConfig, DEFAULT_MIN_FREQ};
use emojirec::encoders::{EncoderKind, ModelConfig};
use emojirec::training::TrainConfig;
use emojirec::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub raw: Option<PathBuf>,
    pub emoji: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub encoder: EncoderKind,
    pub n_x: usize,
    pub n_h: usize,
    pub batch_size: usize,
    pub gamma: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub min_freq: u64,
    pub max_sentence_len: usize,
    pub max_dialogue_len: usize,
    pub max_oov_ratio: f64,
    pub balance: bool,
    pub clip_norm: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let filter = FilterConfig::default();
        Self {
            raw: None,
            emoji: None,
            data: None,
            out: None,
            encoder: EncoderKind::Hierarchical,
            n_x: 384,
            n_h: 384,
            batch_size: 128,
            gamma: 0.5,
            rho: 0.95,
            epsilon: 1e-6,
            patience: 3,
            max_epochs: 50,
            seed: 0,
            min_freq: DEFAULT_MIN_FREQ,
            max_sentence_len: filter.max_sentence_len,
            max_dialogue_len: filter.max_dialogue_len,
            max_oov_ratio: filter.max_oov_ratio,
            balance: false,
            clip_norm: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "raw",
    "emoji",
    "data",
    "out",
    "encoder",
    "n_x",
    "n_h",
    "batch_size",
    "gamma",
    "rho",
    "epsilon",
    "patience",
    "max_epochs",
    "seed",
    "min_freq",
    "max_sentence_len",
    "max_dialogue_len",
    "max_oov_ratio",
    "balance",
    "clip_norm",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid value '{value}' for {key} (expected true or false)"))),
    }
}

impl RunConfig {
    /// Applies one setting; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "raw" => self.raw = Some(value.into()),
            "emoji" => self.emoji = Some(value.into()),
            "data" => self.data = Some(value.into()),
            "out" => self.out = Some(value.into()),
            "encoder" => self.encoder = value.parse()?,
            "n_x" => self.n_x = parse(key, value)?,
            "n_h" => self.n_h = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "rho" => self.rho = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "min_freq" => self.min_freq = parse(key, value)?,
            "max_sentence_len" => self.max_sentence_len = parse(key, value)?,
            "max_dialogue_len" => self.max_dialogue_len = parse(key, value)?,
            "max_oov_ratio" => self.max_oov_ratio = parse(key, value)?,
            "balance" => self.balance = parse_bool(key, value)?,
            "clip_norm" => {
                self.clip_norm = match value {
                    "none" | "" => None,
                    v => Some(parse(key, v)?),
                }
            }
            _ => {
                return Err(Error::Config(format!(
                    "unknown configuration key '{key}' (known keys: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (k, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{origin}:{}: expected 'key = value', got '{line}'", k + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("{origin}:{}: {}", k + 1, strip_kind(&e))))?;
        }
        Ok(())
    }

    pub fn model(&self, vocab_size: usize, n_e: usize) -> ModelConfig {
        ModelConfig::new(self.encoder, vocab_size, n_e)
            .with_dims(self.n_x, self.n_h)
            .with_gamma(self.gamma)
            .with_seed(self.seed)
    }

    pub fn train_config(&self, vocab_size: usize, n_e: usize) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::new(self.model(vocab_size, n_e));
        cfg.batch_size = self.batch_size;
        cfg.rho = self.rho;
        cfg.epsilon = self.epsilon;
        cfg.max_epochs = self.max_epochs;
        cfg.patience = self.patience;
        cfg.clip_norm = self.clip_norm;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn filter(&self) -> FilterConfig {
        FilterConfig {
            max_sentence_len: self.max_sentence_len,
            max_dialogue_len: self.max_dialogue_len,
            max_oov_ratio: self.max_oov_ratio,
        }
    }

    pub fn preprocess_config(&self) -> Result<PreprocessConfig> {
        if self.max_sentence_len == 0 || self.max_dialogue_len == 0 {
            return Err(Error::Config("length caps must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.max_oov_ratio) {
            return Err(Error::Config(format!("max_oov_ratio {} outside [0, 1]", self.max_oov_ratio)));
        }
        if self.min_freq == 0 {
            return Err(Error::Config("min_freq must be at least 1".into()));
        }
        Ok(PreprocessConfig {
            rules: CleanRules::default(),
            filter: self.filter(),
            min_freq: self.min_freq,
            seed: self.seed,
            balance: self.balance,
            ..PreprocessConfig::default()
        })
    }
}

/// Message without the variant prefix added by `Display`.
fn strip_kind(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_and_comments() {
        let mut c = RunConfig::default();
        c.apply_text(
            "# experiment\nencoder = f-lstm\nn_x = 64 # small\nn_h=64\n\nbalance = true\nclip_norm = 5\n",
            "run.conf",
        )
        .unwrap();
        assert_eq!(c.encoder, EncoderKind::Flattened);
        assert_eq!((c.n_x, c.n_h), (64, 64));
        assert!(c.balance);
        assert_eq!(c.clip_norm, Some(5.0));
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let mut c = RunConfig::default();
        let err = c.apply_text("n_x = 8\nlearning_rate = 0.1\n", "run.conf").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config(_)));
        assert!(msg.contains("run.conf:2") && msg.contains("learning_rate"), "{msg}");
    }

    #[test]
    fn malformed_values_are_rejected() {
        let mut c = RunConfig::default();
        assert!(c.set("n_x", "eight").is_err());
        assert!(c.set("balance", "maybe").is_err());
        assert!(c.set("encoder", "cnn").is_err());
        assert!(c.apply_text("just words\n", "x").is_err());
    }

    #[test]
    fn every_key_is_settable() {
        let samples = [
            ("raw", "a"),
            ("emoji", "b"),
            ("data", "c"),
            ("out", "d"),
            ("encoder", "s-bow"),
            ("n_x", "4"),
            ("n_h", "4"),
            ("batch_size", "2"),
            ("gamma", "0.1"),
            ("rho", "0.9"),
            ("epsilon", "1e-8"),
            ("patience", "2"),
            ("max_epochs", "3"),
            ("seed", "9"),
            ("min_freq", "2"),
            ("max_sentence_len", "10"),
            ("max_dialogue_len", "3"),
            ("max_oov_ratio", "0.5"),
            ("balance", "no"),
            ("clip_norm", "none"),
        ];
        assert_eq!(samples.len(), KEYS.len());
        let mut c = RunConfig::default();
        for (k, v) in samples {
            assert!(KEYS.contains(&k));
            c.set(k, v).unwrap();
        }
        assert_eq!(c.encoder, EncoderKind::BowSingle);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn invalid_hyperparameters_fail_validation() {
        let c = RunConfig {
            gamma: 1.0,
            ..RunConfig::default()
        };
        assert!(c.train_config(10, 3).is_err());
        let c = RunConfig {
            rho: 1.5,
            ..RunConfig::default()
        };
        assert!(c.train_config(10, 3).is_err());
        let c = RunConfig {
            max_oov_ratio: 2.0,
            ..RunConfig::default()
        };
        assert!(c.preprocess_config().is_err());
    }
}
