use std::fmt;

use serde::{Deserialize, Serialize};

use super::types::RawDialogue;
use super::vocab::Vocabulary;

/// Why a dialogue was dropped during preprocessing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    NoLabel,
    MultipleLabels,
    Empty,
    TooLongSentence,
    TooManyOov,
}

impl Rejection {
    pub const ALL: [Rejection; 5] = [
        Rejection::NoLabel,
        Rejection::MultipleLabels,
        Rejection::Empty,
        Rejection::TooLongSentence,
        Rejection::TooManyOov,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Rejection::NoLabel => "no_label",
            Rejection::MultipleLabels => "multiple_labels",
            Rejection::Empty => "empty",
            Rejection::TooLongSentence => "too_long_sentence",
            Rejection::TooManyOov => "too_many_oov",
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub max_sentence_len: usize,
    pub max_dialogue_len: usize,
    /// Sentences with an OOV share strictly above this are rejected.
    pub max_oov_ratio: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            max_sentence_len: 50,
            max_dialogue_len: 4,
            max_oov_ratio: 0.25,
        }
    }
}

/// Keeps the last `max_dialogue_len` sentences (ending at the reply), then
/// rejects on any over-long sentence or any sentence whose OOV ratio exceeds
/// the cap.
pub fn filter_dialogue(
    d: &RawDialogue,
    vocab: &Vocabulary,
    config: &FilterConfig,
) -> Result<RawDialogue, Rejection> {
    let start = d.sentences.len().saturating_sub(config.max_dialogue_len);
    let kept = &d.sentences[start..];
    if kept.is_empty() || kept.iter().any(Vec::is_empty) {
        return Err(Rejection::Empty);
    }
    if kept.iter().any(|s| s.len() > config.max_sentence_len) {
        return Err(Rejection::TooLongSentence);
    }
    for s in kept {
        let oov = s.iter().filter(|t| !vocab.contains(t)).count();
        if oov as f64 / s.len() as f64 > config.max_oov_ratio {
            return Err(Rejection::TooManyOov);
        }
    }
    Ok(RawDialogue {
        sentences: kept.to_vec(),
        ..d.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::vocab::build_vocabulary;

    fn vocab() -> Vocabulary {
        let words: Vec<String> = ["a", "b", "c", "d", "e", "f"].map(String::from).to_vec();
        build_vocabulary(&[RawDialogue::new(vec![words])], 1).unwrap()
    }

    fn sentence(n: usize) -> Vec<String> {
        (0..n).map(|k| ["a", "b", "c"][k % 3].to_string()).collect()
    }

    #[test]
    fn sentence_length_cap() {
        let v = vocab();
        let cfg = FilterConfig::default();
        let long = RawDialogue::new(vec![sentence(51)]);
        assert_eq!(filter_dialogue(&long, &v, &cfg), Err(Rejection::TooLongSentence));
        let ok = RawDialogue::new(vec![sentence(50)]);
        assert!(filter_dialogue(&ok, &v, &cfg).is_ok());
    }

    #[test]
    fn oov_boundary_is_inclusive() {
        let v = vocab();
        let cfg = FilterConfig::default();
        let quarter = RawDialogue::from_strs(&[&["a", "b", "zzz", "c"]]);
        assert!(filter_dialogue(&quarter, &v, &cfg).is_ok());
        let third = RawDialogue::from_strs(&[&["a", "zzz", "c"]]);
        assert_eq!(filter_dialogue(&third, &v, &cfg), Err(Rejection::TooManyOov));
    }

    #[test]
    fn keeps_last_four_sentences() {
        let v = vocab();
        let d = RawDialogue::from_strs(&[&["a"], &["b"], &["c"], &["d"], &["e"], &["f"]]);
        let out = filter_dialogue(&d, &v, &FilterConfig::default()).unwrap();
        assert_eq!(out, RawDialogue::from_strs(&[&["c"], &["d"], &["e"], &["f"]]));
        // dropped sentences no longer count against the dialogue
        let d = RawDialogue::from_strs(&[&["q", "q", "q"], &["a"], &["b"], &["c"], &["d"]]);
        assert!(filter_dialogue(&d, &v, &FilterConfig::default()).is_ok());
    }

    #[test]
    fn accepted_output_is_a_fixpoint() {
        let v = vocab();
        let cfg = FilterConfig::default();
        let d = RawDialogue::from_strs(&[&["a"], &["b", "c"], &["c"], &["d", "e"], &["f", "a", "b", "x"]]);
        let once = filter_dialogue(&d, &v, &cfg).unwrap();
        assert_eq!(filter_dialogue(&once, &v, &cfg).unwrap(), once);
    }

    #[test]
    fn empty_rejected() {
        let v = vocab();
        let cfg = FilterConfig::default();
        assert_eq!(filter_dialogue(&RawDialogue::new(vec![]), &v, &cfg), Err(Rejection::Empty));
        assert_eq!(
            filter_dialogue(&RawDialogue::new(vec![vec![]]), &v, &cfg),
            Err(Rejection::Empty)
        );
    }
}
