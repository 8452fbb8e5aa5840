//! Deterministic synthetic corpora where the label is planted a fixed number
//! of turns before the reply.

use serde::{Deserialize, Serialize};

use super::labels::{EmojiInventory, LabelSet};
use super::types::RawDialogue;
use crate::error::{Error, Result};
use crate::nn::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub classes: usize,
    /// Number of distinct filler tokens.
    pub vocab_size: usize,
    pub dialogues_per_class: usize,
    /// Turns between the keyword sentence and the reply (0 = the reply itself).
    pub context_depth: usize,
    /// Probability that the planted keyword is drawn uniformly at random
    /// instead of from the gold class.
    pub noise: f64,
    pub seed: u64,
    pub max_dialogue_len: usize,
    pub min_sentence_len: usize,
    pub max_sentence_len: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            classes: 4,
            vocab_size: 40,
            dialogues_per_class: 100,
            context_depth: 1,
            noise: 0.0,
            seed: 0,
            max_dialogue_len: 4,
            min_sentence_len: 3,
            max_sentence_len: 6,
        }
    }
}

pub fn filler_token(k: usize) -> String {
    format!("w{k}")
}

pub fn keyword_token(class: usize) -> String {
    format!("key{class}")
}

pub fn label_name(class: usize) -> String {
    format!("emo{class}")
}

pub fn emoji_surface(class: usize) -> String {
    format!("[emo{class}]")
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.classes));
        }
        if self.vocab_size == 0 || self.dialogues_per_class == 0 {
            return bad("vocab_size and dialogues_per_class must be positive".into());
        }
        if self.context_depth >= self.max_dialogue_len {
            return bad(format!(
                "context_depth {} must be below max_dialogue_len {}",
                self.context_depth, self.max_dialogue_len
            ));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return bad(format!("noise {} outside [0, 1]", self.noise));
        }
        if self.min_sentence_len == 0 || self.min_sentence_len > self.max_sentence_len {
            return bad("sentence length range must satisfy 1 <= min <= max".into());
        }
        Ok(())
    }

    pub fn label_set(&self) -> Result<LabelSet> {
        LabelSet::new((0..self.classes).map(label_name).collect())
    }

    pub fn inventory(&self) -> Result<EmojiInventory> {
        EmojiInventory::new((0..self.classes).map(|c| (emoji_surface(c), label_name(c))).collect())
    }

    pub fn total(&self) -> usize {
        self.classes * self.dialogues_per_class
    }
}

fn filler_sentence(spec: &SyntheticSpec, rng: &mut RngStream) -> Vec<String> {
    let len = spec.min_sentence_len + rng.below(spec.max_sentence_len - spec.min_sentence_len + 1);
    (0..len).map(|_| filler_token(rng.below(spec.vocab_size))).collect()
}

/// Emits `dialogues_per_class` labeled dialogues per class in a seeded
/// shuffled order.
///
/// Every sentence is filler drawn uniformly from the filler pool, except that
/// the sentence `context_depth` turns before the reply has one token replaced
/// by a class keyword. The reply therefore carries no label information when
/// `context_depth >= 1`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<RawDialogue>> {
    spec.validate()?;
    let mut rng = RngStream::new(spec.seed);
    let mut out = Vec::with_capacity(spec.total());
    for _ in 0..spec.dialogues_per_class {
        for class in 0..spec.classes {
            let n = spec.context_depth + 1 + rng.below(spec.max_dialogue_len - spec.context_depth);
            let mut sentences: Vec<Vec<String>> = (0..n).map(|_| filler_sentence(spec, &mut rng)).collect();
            let planted = if rng.bernoulli(spec.noise) {
                rng.below(spec.classes)
            } else {
                class
            };
            let target = &mut sentences[n - 1 - spec.context_depth];
            let pos = rng.below(target.len());
            target[pos] = keyword_token(planted);
            out.push(RawDialogue::new(sentences).with_label(label_name(class)));
        }
    }
    rng.shuffle(&mut out);
    Ok(out)
}

/// Converts a labeled synthetic dialogue into raw form: the label is removed
/// and its emoji surface appended to the reply.
pub fn embed_emoji(d: &RawDialogue, labels: &LabelSet) -> Result<RawDialogue> {
    let name = d
        .label
        .as_deref()
        .ok_or_else(|| Error::Data("dialogue has no label to embed".into()))?;
    let class = labels
        .id(name)
        .ok_or_else(|| Error::Label(format!("unknown label '{name}'")))?;
    let mut sentences = d.sentences.clone();
    if let Some(reply) = sentences.last_mut() {
        reply.push(emoji_surface(class));
    }
    Ok(RawDialogue {
        sentences,
        label: None,
        source: d.source.clone(),
    })
}
