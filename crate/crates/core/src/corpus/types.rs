use serde::{Deserialize, Serialize};

/// Reserved vocabulary id for padding.
pub const PAD_ID: u32 = 0;
/// Reserved vocabulary id for out-of-vocabulary tokens.
pub const UNK_ID: u32 = 1;

/// A pre-tokenized dialogue as read from a corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDialogue {
    pub sentences: Vec<Vec<String>>,
    /// Gold label name for already-labeled corpora.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl RawDialogue {
    pub fn new(sentences: Vec<Vec<String>>) -> Self {
        Self {
            sentences,
            label: None,
            source: None,
        }
    }

    pub fn from_strs(sentences: &[&[&str]]) -> Self {
        Self::new(
            sentences
                .iter()
                .map(|s| s.iter().map(|t| t.to_string()).collect())
                .collect(),
        )
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

/// A dialogue mapped to vocabulary ids. The last sentence is the reply; all
/// earlier sentences are context.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledDialogue {
    pub sentences: Vec<Vec<u32>>,
    pub label: usize,
}

impl LabeledDialogue {
    pub fn new(sentences: Vec<Vec<u32>>, label: usize) -> Self {
        Self { sentences, label }
    }

    pub fn reply(&self) -> &[u32] {
        self.sentences.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn context(&self) -> &[Vec<u32>] {
        &self.sentences[..self.sentences.len().saturating_sub(1)]
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}
