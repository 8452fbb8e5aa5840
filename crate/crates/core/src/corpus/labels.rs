use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::types::RawDialogue;
use super::Rejection;
use crate::error::{Error, Result};

/// Emoji surface forms and the label each one denotes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmojiInventory {
    entries: Vec<(String, String)>,
    by_surface: HashMap<String, String>,
}

impl EmojiInventory {
    pub fn new(entries: Vec<(String, String)>) -> Result<Self> {
        let mut by_surface = HashMap::new();
        for (surface, label) in &entries {
            if surface.is_empty() || label.is_empty() || surface.contains(char::is_whitespace) {
                return Err(Error::Data(format!("invalid inventory entry '{surface}' -> '{label}'")));
            }
            if by_surface.insert(surface.clone(), label.clone()).is_some() {
                return Err(Error::Data(format!("duplicate emoji surface '{surface}'")));
            }
        }
        Ok(Self { entries, by_surface })
    }

    /// Parses `surface<TAB>label_name` lines; blank lines are skipped.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (k, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let Some((surface, label)) = line.split_once('\t') else {
                return Err(Error::Data(format!("inventory line {}: expected surface<TAB>label", k + 1)));
            };
            entries.push((surface.to_string(), label.to_string()));
        }
        Self::new(entries)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (s, l) in &self.entries {
            let _ = writeln!(out, "{s}\t{l}");
        }
        out
    }

    pub fn label_of(&self, token: &str) -> Option<&str> {
        self.by_surface.get(token).map(String::as_str)
    }

    pub fn is_emoji(&self, token: &str) -> bool {
        self.by_surface.contains_key(token)
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Label names in order of first appearance.
    pub fn label_set(&self) -> Result<LabelSet> {
        let mut names: Vec<String> = Vec::new();
        for (_, l) in &self.entries {
            if !names.contains(l) {
                names.push(l.clone());
            }
        }
        LabelSet::new(names)
    }
}

/// Bijective emoji-name ↔ id map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    names: Vec<String>,
    ids: HashMap<String, usize>,
}

impl LabelSet {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::Config(format!("need at least 2 labels, got {}", names.len())));
        }
        let mut ids = HashMap::new();
        for (k, n) in names.iter().enumerate() {
            if n.is_empty() || n.contains(char::is_whitespace) {
                return Err(Error::Data(format!("invalid label name '{n}'")));
            }
            if ids.insert(n.clone(), k).is_some() {
                return Err(Error::Data(format!("duplicate label '{n}'")));
            }
        }
        Ok(Self { names, ids })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// `label_name<TAB>id` lines in id order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (k, n) in self.names.iter().enumerate() {
            let _ = writeln!(out, "{n}\t{k}");
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut names = Vec::new();
        for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
            let parsed = line
                .split_once('\t')
                .and_then(|(n, id)| id.parse::<usize>().ok().map(|id| (n, id)));
            match parsed {
                Some((n, id)) if id == names.len() => names.push(n.to_string()),
                _ => return Err(Error::Data(format!("label file line {}: expected name<TAB>{}", k + 1, names.len()))),
            }
        }
        Self::new(names)
    }

    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_tsv().as_bytes()))
    }
}

/// Picks the reply, truncates after it, and strips every emoji token.
///
/// The reply is the first sentence containing any inventory emoji; the
/// dialogue is rejected when that sentence carries two or more distinct
/// labels, when no sentence carries one, or when the reply is empty after
/// stripping. Context sentences left empty are dropped.
pub fn extract_label(
    raw: &RawDialogue,
    inventory: &EmojiInventory,
    labels: &LabelSet,
) -> std::result::Result<(RawDialogue, usize), Rejection> {
    let Some(reply_idx) = raw
        .sentences
        .iter()
        .position(|s| s.iter().any(|t| inventory.is_emoji(t)))
    else {
        return Err(Rejection::NoLabel);
    };
    let found: BTreeSet<&str> = raw.sentences[reply_idx]
        .iter()
        .filter_map(|t| inventory.label_of(t))
        .collect();
    if found.len() >= 2 {
        return Err(Rejection::MultipleLabels);
    }
    let name = found.into_iter().next().expect("reply holds an emoji");
    let label = labels.id(name).ok_or(Rejection::NoLabel)?;

    let strip = |s: &Vec<String>| -> Vec<String> { s.iter().filter(|t| !inventory.is_emoji(t)).cloned().collect() };
    let reply = strip(&raw.sentences[reply_idx]);
    if reply.is_empty() {
        return Err(Rejection::Empty);
    }
    let mut sentences: Vec<Vec<String>> = raw.sentences[..reply_idx]
        .iter()
        .map(strip)
        .filter(|s| !s.is_empty())
        .collect();
    sentences.push(reply);
    Ok((
        RawDialogue {
            sentences,
            label: Some(name.to_string()),
            source: raw.source.clone(),
        },
        label,
    ))
}
