use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::types::{RawDialogue, PAD_ID, UNK_ID};
use crate::error::{Error, Result};

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
/// Minimum training-split frequency for a token to get its own id.
pub const DEFAULT_MIN_FREQ: u64 = 30;

/// Token ↔ id map. Ids 0 and 1 are reserved for padding and unknown tokens;
/// the rest are ordered by descending frequency, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    freqs: Vec<u64>,
    ids: HashMap<String, u32>,
}

impl Vocabulary {
    fn from_entries(entries: Vec<(String, u64)>) -> Self {
        let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        let mut freqs = vec![0, 0];
        for (t, f) in entries {
            tokens.push(t);
            freqs.push(f);
        }
        let ids = tokens.iter().enumerate().map(|(k, t)| (t.clone(), k as u32)).collect();
        Self { tokens, freqs, ids }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn frequency(&self, id: u32) -> u64 {
        self.freqs[id as usize]
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.get(token).is_some_and(|&id| id > UNK_ID)
    }

    pub fn id(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn encode_sentence(&self, sentence: &[String]) -> Vec<u32> {
        sentence.iter().map(|t| self.id(t)).collect()
    }

    pub fn encode(&self, dialogue: &RawDialogue) -> Vec<Vec<u32>> {
        dialogue.sentences.iter().map(|s| self.encode_sentence(s)).collect()
    }

    /// `token<TAB>id<TAB>frequency` lines sorted by id, reserved ids included.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (k, (t, f)) in self.tokens.iter().zip(&self.freqs).enumerate() {
            let _ = writeln!(out, "{t}\t{k}\t{f}");
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = || Error::Data(format!("vocabulary line {}: expected token<TAB>{k}<TAB>frequency", k + 1));
            let [token, id, freq] = fields[..] else {
                return Err(bad());
            };
            if id.parse::<usize>().ok() != Some(k) {
                return Err(bad());
            }
            let freq: u64 = freq.parse().map_err(|_| bad())?;
            match k {
                0 if token == PAD_TOKEN => {}
                1 if token == UNK_TOKEN => {}
                0 | 1 => return Err(bad()),
                _ => entries.push((token.to_string(), freq)),
            }
        }
        if entries.is_empty() && text.lines().count() < 2 {
            return Err(Error::Data("vocabulary file lacks reserved entries".into()));
        }
        Ok(Self::from_entries(entries))
    }

    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_tsv().as_bytes()))
    }
}

/// Token frequencies over every sentence of `dialogues`.
pub fn count_tokens<'a>(dialogues: impl IntoIterator<Item = &'a RawDialogue>) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for d in dialogues {
        for t in d.sentences.iter().flatten() {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Builds the vocabulary from the training split only.
pub fn build_vocabulary(train: &[RawDialogue], min_freq: u64) -> Result<Vocabulary> {
    if train.is_empty() {
        return Err(Error::Data("cannot build a vocabulary from an empty corpus".into()));
    }
    let mut entries: Vec<(String, u64)> = count_tokens(train)
        .into_iter()
        .filter(|(t, f)| *f >= min_freq.max(1) && t != PAD_TOKEN && t != UNK_TOKEN)
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(Vocabulary::from_entries(entries))
}

const _: () = assert!(PAD_ID == 0 && UNK_ID == 1);
