use std::fs;
use std::path::Path;

use super::types::RawDialogue;
use crate::error::{Error, Result};

/// Parses JSON-lines dialogues. Blank lines are skipped; errors carry the
/// 1-based line number.
pub fn parse_jsonl(text: &str, origin: &Path) -> Result<Vec<RawDialogue>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: k + 1,
            message,
        };
        let d: RawDialogue = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        if d.sentences.is_empty() {
            return Err(parse_err("dialogue has no sentences".into()));
        }
        if let Some(t) = d
            .sentences
            .iter()
            .flatten()
            .find(|t| t.is_empty() || t.contains(char::is_whitespace))
        {
            return Err(parse_err(format!("token {t:?} is empty or contains whitespace")));
        }
        out.push(d);
    }
    Ok(out)
}

pub fn read_jsonl(path: &Path) -> Result<Vec<RawDialogue>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&text, path)
}

pub fn to_jsonl(dialogues: &[RawDialogue]) -> String {
    let mut out = String::new();
    for d in dialogues {
        out.push_str(&serde_json::to_string(d).expect("dialogues always serialize"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl(path: &Path, dialogues: &[RawDialogue]) -> Result<()> {
    fs::write(path, to_jsonl(dialogues)).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
