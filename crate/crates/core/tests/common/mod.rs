#![allow(dead_code)]

use emojirec::corpus::{build_vocabulary, encode_split, generate_synthetic, LabelSet, LabeledDialogue, SyntheticSpec, Vocabulary};

pub struct Corpus {
    pub train: Vec<LabeledDialogue>,
    pub valid: Vec<LabeledDialogue>,
    pub test: Vec<LabeledDialogue>,
    pub vocab: Vocabulary,
    pub labels: LabelSet,
}

/// Independent train/valid/test draws of one synthetic spec; the vocabulary
/// covers every train token.
pub fn synthetic_corpus(base: &SyntheticSpec, per_class: [usize; 3]) -> Corpus {
    let draw = |n: usize, offset: u64| {
        generate_synthetic(&SyntheticSpec {
            dialogues_per_class: n,
            seed: base.seed.wrapping_mul(31).wrapping_add(offset),
            ..base.clone()
        })
        .unwrap()
    };
    let (train, valid, test) = (draw(per_class[0], 1), draw(per_class[1], 2), draw(per_class[2], 3));
    let labels = base.label_set().unwrap();
    let vocab = build_vocabulary(&train, 1).unwrap();
    let enc = |split| encode_split(split, &vocab, &labels).unwrap();
    Corpus {
        train: enc(&train),
        valid: enc(&valid),
        test: enc(&test),
        vocab: vocab.clone(),
        labels,
    }
}
