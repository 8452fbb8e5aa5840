use serde::{Deserialize, Serialize};

use super::types::RawDialogue;

/// Token patterns removed during cleaning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanRules {
    /// Tokens starting with any of these are dropped (mentions, repost chains, links).
    pub drop_prefixes: Vec<String>,
    /// Tokens equal to any of these are dropped (quote and repost markers).
    pub drop_tokens: Vec<String>,
}

impl Default for CleanRules {
    fn default() -> Self {
        Self {
            drop_prefixes: ["@", "//@", "http://", "https://"]
                .map(String::from)
                .to_vec(),
            drop_tokens: ["//", "RT", "转发微博", "回复", "「", "」", "“", "”"]
                .map(String::from)
                .to_vec(),
        }
    }
}

impl CleanRules {
    pub fn none() -> Self {
        Self {
            drop_prefixes: vec![],
            drop_tokens: vec![],
        }
    }

    pub fn matches(&self, token: &str) -> bool {
        self.drop_tokens.iter().any(|t| t == token)
            || self.drop_prefixes.iter().any(|p| token.starts_with(p.as_str()))
    }
}

/// Removes matching tokens and then any sentence left empty. Returns `None`
/// when nothing remains.
pub fn clean_dialogue(raw: &RawDialogue, rules: &CleanRules) -> Option<RawDialogue> {
    let sentences: Vec<Vec<String>> = raw
        .sentences
        .iter()
        .map(|s| s.iter().filter(|t| !rules.matches(t)).cloned().collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect();
    if sentences.is_empty() {
        return None;
    }
    Some(RawDialogue {
        sentences,
        ..raw.clone()
    })
}
