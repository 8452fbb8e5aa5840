use super::types::{LabeledDialogue, PAD_ID};
use crate::nn::RngStream;

/// Padded mini-batch, `batch × max_sentences × max_words` in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub max_sentences: usize,
    pub max_words: usize,
    pub tokens: Vec<u32>,
    /// 1 where a real token sits, 0 on padding.
    pub mask: Vec<u8>,
    pub sentence_counts: Vec<usize>,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn from_examples(examples: &[&LabeledDialogue]) -> Self {
        let max_sentences = examples.iter().map(|d| d.sentences.len()).max().unwrap_or(0);
        let max_words = examples
            .iter()
            .flat_map(|d| d.sentences.iter().map(Vec::len))
            .max()
            .unwrap_or(0);
        let cells = examples.len() * max_sentences * max_words;
        let mut tokens = vec![PAD_ID; cells];
        let mut mask = vec![0u8; cells];
        for (i, d) in examples.iter().enumerate() {
            for (s, sentence) in d.sentences.iter().enumerate() {
                for (t, &tok) in sentence.iter().enumerate() {
                    let k = (i * max_sentences + s) * max_words + t;
                    tokens[k] = tok;
                    mask[k] = 1;
                }
            }
        }
        Self {
            max_sentences,
            max_words,
            tokens,
            mask,
            sentence_counts: examples.iter().map(|d| d.sentences.len()).collect(),
            labels: examples.iter().map(|d| d.label).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Real tokens of example `i`, sentence by sentence, read through the mask.
    pub fn sentences(&self, i: usize) -> Vec<Vec<u32>> {
        (0..self.sentence_counts[i])
            .map(|s| {
                let base = (i * self.max_sentences + s) * self.max_words;
                (base..base + self.max_words)
                    .filter(|&k| self.mask[k] == 1)
                    .map(|k| self.tokens[k])
                    .collect()
            })
            .collect()
    }

    pub fn example(&self, i: usize) -> LabeledDialogue {
        LabeledDialogue::new(self.sentences(i), self.labels[i])
    }
}

/// Epoch order: a permutation of `0..n` seeded by `(seed, epoch)`.
pub fn epoch_order(n: usize, seed: u64, epoch: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    RngStream::with_stream(seed, (1 << 32) + epoch).shuffle(&mut order);
    order
}

/// Batches of `batch_size` over a per-epoch shuffle; the last batch may be short.
pub fn make_batches(
    split: &[LabeledDialogue],
    batch_size: usize,
    seed: u64,
    epoch: u64,
) -> impl Iterator<Item = Batch> + '_ {
    let order = epoch_order(split.len(), seed, epoch);
    let size = batch_size.max(1);
    let n_batches = split.len().div_ceil(size);
    (0..n_batches).map(move |b| {
        let examples: Vec<&LabeledDialogue> = order[b * size..((b + 1) * size).min(order.len())]
            .iter()
            .map(|&i| &split[i])
            .collect();
        Batch::from_examples(&examples)
    })
}
