//! End-to-end preprocessing: clean, extract labels, split, build the
//! vocabulary on the training split, and filter every split against it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::clean::{clean_dialogue, CleanRules};
use super::filter::{filter_dialogue, FilterConfig, Rejection};
use super::labels::{extract_label, EmojiInventory, LabelSet};
use super::split::{balance_classes, split_corpus, Splits};
use super::types::{LabeledDialogue, RawDialogue};
use super::vocab::{build_vocabulary, Vocabulary, DEFAULT_MIN_FREQ};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub rules: CleanRules,
    pub filter: FilterConfig,
    pub min_freq: u64,
    pub fractions: [f64; 3],
    pub seed: u64,
    pub balance: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            rules: CleanRules::default(),
            filter: FilterConfig::default(),
            min_freq: DEFAULT_MIN_FREQ,
            fractions: [0.9, 0.05, 0.05],
            seed: 0,
            balance: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub total: usize,
    pub per_class: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessStats {
    pub input: usize,
    pub labeled: usize,
    pub rejected: BTreeMap<String, usize>,
    pub vocab_size: usize,
    pub train: SplitStats,
    pub valid: SplitStats,
    pub test: SplitStats,
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub splits: Splits<RawDialogue>,
    /// Training split before filtering; the vocabulary is a function of this alone.
    pub train_candidates: Vec<RawDialogue>,
    pub vocab: Vocabulary,
    pub labels: LabelSet,
    pub stats: PreprocessStats,
}

fn strip_emojis(d: &RawDialogue, inventory: &EmojiInventory) -> Option<RawDialogue> {
    let sentences: Vec<Vec<String>> = d
        .sentences
        .iter()
        .map(|s| s.iter().filter(|t| !inventory.is_emoji(t)).cloned().collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect();
    (!sentences.is_empty()).then(|| RawDialogue {
        sentences,
        ..d.clone()
    })
}

/// Cleans and labels one input dialogue. Inputs that already carry a label
/// skip extraction but still lose any emoji tokens.
pub fn label_dialogue(
    raw: &RawDialogue,
    inventory: &EmojiInventory,
    labels: &LabelSet,
    rules: &CleanRules,
) -> std::result::Result<(RawDialogue, usize), Rejection> {
    let cleaned = clean_dialogue(raw, rules).ok_or(Rejection::Empty)?;
    match &raw.label {
        Some(name) => {
            let id = labels.id(name).ok_or(Rejection::NoLabel)?;
            let d = strip_emojis(&cleaned, inventory).ok_or(Rejection::Empty)?;
            Ok((d, id))
        }
        None => extract_label(&cleaned, inventory, labels),
    }
}

fn split_stats(split: &[RawDialogue], labels: &LabelSet) -> SplitStats {
    let mut per_class: BTreeMap<String, usize> = labels.names().iter().map(|n| (n.clone(), 0)).collect();
    for d in split {
        if let Some(l) = &d.label {
            *per_class.entry(l.clone()).or_insert(0) += 1;
        }
    }
    SplitStats {
        total: split.len(),
        per_class,
    }
}

pub fn preprocess(raws: &[RawDialogue], inventory: &EmojiInventory, config: &PreprocessConfig) -> Result<Preprocessed> {
    let labels = inventory.label_set()?;
    let mut rejected: BTreeMap<String, usize> = Rejection::ALL.iter().map(|r| (r.as_str().to_string(), 0)).collect();
    let mut candidates: Vec<(RawDialogue, usize)> = Vec::new();
    for raw in raws {
        match label_dialogue(raw, inventory, &labels, &config.rules) {
            Ok(c) => candidates.push(c),
            Err(r) => *rejected.get_mut(r.as_str()).expect("all reasons present") += 1,
        }
    }
    let labeled = candidates.len();
    if config.balance {
        candidates = balance_classes(candidates, |c| c.1, config.seed);
    }
    let candidates: Vec<RawDialogue> = candidates.into_iter().map(|(d, _)| d).collect();
    if candidates.is_empty() {
        return Err(Error::Data("no dialogue survived label extraction".into()));
    }
    let Splits { train, valid, test } = split_corpus(candidates, config.fractions, config.seed)?;
    let vocab = build_vocabulary(&train, config.min_freq)?;

    let mut filter = |split: &[RawDialogue]| -> Vec<RawDialogue> {
        split
            .iter()
            .filter_map(|d| match filter_dialogue(d, &vocab, &config.filter) {
                Ok(kept) => Some(kept),
                Err(r) => {
                    *rejected.get_mut(r.as_str()).expect("all reasons present") += 1;
                    None
                }
            })
            .collect()
    };
    let splits = Splits {
        train: filter(&train),
        valid: filter(&valid),
        test: filter(&test),
    };
    let stats = PreprocessStats {
        input: raws.len(),
        labeled,
        rejected,
        vocab_size: vocab.len(),
        train: split_stats(&splits.train, &labels),
        valid: split_stats(&splits.valid, &labels),
        test: split_stats(&splits.test, &labels),
    };
    Ok(Preprocessed {
        splits,
        train_candidates: train,
        vocab,
        labels,
        stats,
    })
}

/// Maps labeled raw dialogues to ids.
pub fn encode_split(split: &[RawDialogue], vocab: &Vocabulary, labels: &LabelSet) -> Result<Vec<LabeledDialogue>> {
    split
        .iter()
        .map(|d| {
            let name = d
                .label
                .as_deref()
                .ok_or_else(|| Error::Data("dialogue in a labeled split has no label".into()))?;
            let label = labels
                .id(name)
                .ok_or_else(|| Error::Label(format!("unknown label '{name}'")))?;
            Ok(LabeledDialogue::new(vocab.encode(d), label))
        })
        .collect()
}
