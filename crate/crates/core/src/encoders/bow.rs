//! Bag-of-words baselines: TF-IDF features with a multinomial logistic
//! regression head.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledDialogue, UNK_ID};
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, softmax, Matrix, Parameters, RngStream};

/// Which sentences feed the bag of words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BowKind {
    /// Reply sentence only.
    Single,
    /// Every sentence of the dialogue.
    Flattened,
}

/// Sparse feature vector, sorted by vocabulary id.
pub type SparseVec = Vec<(u32, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    pub kind: BowKind,
    pub idf: Vec<f64>,
    /// `n_e × vocab_size`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BowTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for BowTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 0.1,
            batch_size: 128,
            seed: 0,
        }
    }
}

fn document<'a>(sentences: &'a [Vec<u32>], kind: BowKind) -> impl Iterator<Item = u32> + 'a {
    let skip = match kind {
        BowKind::Single => sentences.len().saturating_sub(1),
        BowKind::Flattened => 0,
    };
    sentences[skip..]
        .iter()
        .flat_map(|s| s.iter().copied())
        .filter(|&t| t > UNK_ID)
}

fn term_counts(sentences: &[Vec<u32>], kind: BowKind, vocab_size: usize) -> BTreeMap<u32, f64> {
    let mut counts = BTreeMap::new();
    for t in document(sentences, kind).filter(|&t| (t as usize) < vocab_size) {
        *counts.entry(t).or_insert(0.0) += 1.0;
    }
    counts
}

/// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
pub fn fit_idf(train: &[LabeledDialogue], kind: BowKind, vocab_size: usize) -> Result<Vec<f64>> {
    if train.is_empty() {
        return Err(Error::Data("cannot fit idf on an empty corpus".into()));
    }
    let mut df = vec![0usize; vocab_size];
    for d in train {
        for t in term_counts(&d.sentences, kind, vocab_size).keys() {
            df[*t as usize] += 1;
        }
    }
    let n = train.len() as f64;
    Ok(df
        .into_iter()
        .map(|f| ((1.0 + n) / (1.0 + f as f64)).ln() + 1.0)
        .collect())
}

/// Raw term count times idf. Reserved and out-of-range ids are ignored.
pub fn bow_featurize(sentences: &[Vec<u32>], kind: BowKind, idf: &[f64]) -> SparseVec {
    term_counts(sentences, kind, idf.len())
        .into_iter()
        .map(|(t, tf)| (t, tf * idf[t as usize]))
        .collect()
}

impl TfIdfModel {
    pub fn zeros(kind: BowKind, idf: Vec<f64>, n_e: usize) -> Self {
        let v = idf.len();
        Self {
            kind,
            idf,
            weights: Matrix::zeros(n_e, v),
            bias: vec![0.0; n_e],
        }
    }

    pub fn n_e(&self) -> usize {
        self.bias.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.idf.len()
    }

    pub fn logits(&self, x: &SparseVec) -> Vec<f64> {
        let mut z = self.bias.clone();
        for (r, zr) in z.iter_mut().enumerate() {
            let row = self.weights.row(r);
            *zr += x.iter().map(|&(t, v)| row[t as usize] * v).sum::<f64>();
        }
        z
    }

    pub fn predict(&self, sentences: &[Vec<u32>]) -> Result<Vec<f64>> {
        softmax(&self.logits(&bow_featurize(sentences, self.kind, &self.idf)))
    }

    /// Mean cross-entropy over `(features, gold)` pairs with its gradient.
    pub fn loss_and_grad(&self, batch: &[(&SparseVec, usize)]) -> Result<(f64, TfIdfModel)> {
        let mut grads = self.zeros_like();
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for &(x, gold) in batch {
            let ce = cross_entropy(&softmax(&self.logits(x))?, gold)?;
            loss += ce.loss * scale;
            for (r, g) in ce.grad_logits.iter().enumerate() {
                let g = g * scale;
                grads.bias[r] += g;
                let row = grads.weights.row_mut(r);
                for &(t, v) in x {
                    row[t as usize] += g * v;
                }
            }
        }
        Ok((loss, grads))
    }
}

/// Only the classifier is trainable; idf stays fixed.
impl Parameters for TfIdfModel {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![self.weights.as_slice(), &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.weights.as_mut_slice(), &mut self.bias]
    }
}

/// Fits idf on `train`, then softmax regression by mini-batch gradient
/// descent with a fixed step.
pub fn bow_train(
    train: &[LabeledDialogue],
    kind: BowKind,
    vocab_size: usize,
    n_e: usize,
    config: &BowTrainConfig,
) -> Result<TfIdfModel> {
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    let idf = fit_idf(train, kind, vocab_size)?;
    if let Some(d) = train.iter().find(|d| d.label >= n_e) {
        return Err(Error::Label(format!("label {} outside {n_e} classes", d.label)));
    }
    let features: Vec<SparseVec> = train
        .iter()
        .map(|d| bow_featurize(&d.sentences, kind, &idf))
        .collect();
    let mut model = TfIdfModel::zeros(kind, idf, n_e);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..config.epochs {
        RngStream::with_stream(config.seed, epoch as u64).shuffle(&mut order);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&SparseVec, usize)> = chunk.iter().map(|&i| (&features[i], train[i].label)).collect();
            let (_, grads) = model.loss_and_grad(&batch)?;
            for (p, g) in model.tensors_mut().into_iter().zip(grads.tensors()) {
                for (pv, gv) in p.iter_mut().zip(g) {
                    *pv -= config.learning_rate * gv;
                }
            }
        }
    }
    if !model.all_finite() {
        return Err(Error::Numeric("logistic regression diverged".into()));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradient_check;

    fn dlg(sentences: &[&[u32]], label: usize) -> LabeledDialogue {
        LabeledDialogue::new(sentences.iter().map(|s| s.to_vec()).collect(), label)
    }

    #[test]
    fn empty_document_is_zero() {
        assert!(bow_featurize(&[vec![]], BowKind::Flattened, &[1.0; 5]).is_empty());
        // reserved ids never count
        assert!(bow_featurize(&[vec![0, 1, 1]], BowKind::Flattened, &[1.0; 5]).is_empty());
    }

    #[test]
    fn hand_computed_tfidf_table() {
        // docs (flattened): A = {2,2,3}, B = {3,4}, C = {3}; N = 3
        let train = vec![dlg(&[&[2], &[2, 3]], 0), dlg(&[&[3, 4]], 1), dlg(&[&[3]], 0)];
        let idf = fit_idf(&train, BowKind::Flattened, 6).unwrap();
        let ln = |x: f64| x.ln();
        assert!((idf[3] - 1.0).abs() < 1e-15); // df = N
        assert!((idf[2] - (ln(4.0 / 2.0) + 1.0)).abs() < 1e-15);
        assert!((idf[4] - (ln(4.0 / 2.0) + 1.0)).abs() < 1e-15);
        assert!((idf[5] - (ln(4.0) + 1.0)).abs() < 1e-15); // unseen
        let x = bow_featurize(&train[0].sentences, BowKind::Flattened, &idf);
        assert_eq!(x.len(), 2);
        assert_eq!(x[0].0, 2);
        assert!((x[0].1 - 2.0 * (ln(2.0) + 1.0)).abs() < 1e-15);
        assert_eq!(x[1], (3, 1.0));

        // single: only the reply sentence {2,3}; context token 2 ignored
        let idf_s = fit_idf(&train, BowKind::Single, 6).unwrap();
        let xs = bow_featurize(&train[0].sentences, BowKind::Single, &idf_s);
        assert_eq!(xs.iter().map(|p| p.0).collect::<Vec<_>>(), vec![2, 3]);
        assert!((xs[0].1 - (ln(4.0 / 2.0) + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn separable_toy_is_fit_perfectly() {
        let mut train = Vec::new();
        for k in 0..20 {
            train.push(dlg(&[&[2 + (k % 3) as u32]], 0));
            train.push(dlg(&[&[5 + (k % 3) as u32]], 1));
        }
        let cfg = BowTrainConfig {
            batch_size: 8,
            ..Default::default()
        };
        let m = bow_train(&train, BowKind::Single, 8, 2, &cfg).unwrap();
        for d in &train {
            let p = m.predict(&d.sentences).unwrap();
            assert_eq!(if p[0] > p[1] { 0 } else { 1 }, d.label);
        }
    }

    #[test]
    fn constant_features_converge_to_prior() {
        // every reply is the same token: features identical, prior = (0.6, 0.3, 0.1)
        let mut train = Vec::new();
        for (label, count) in [(0, 6), (1, 3), (2, 1)] {
            for _ in 0..count {
                train.push(dlg(&[&[4]], label));
            }
        }
        let cfg = BowTrainConfig {
            epochs: 3000,
            learning_rate: 0.5,
            batch_size: 10,
            seed: 1,
        };
        let m = bow_train(&train, BowKind::Single, 6, 3, &cfg).unwrap();
        let p = m.predict(&train[0].sentences).unwrap();
        for (got, want) in p.iter().zip([0.6, 0.3, 0.1]) {
            assert!((got - want).abs() < 1e-6, "{p:?}");
        }
    }

    #[test]
    fn head_gradient_matches_finite_differences() {
        let train = vec![dlg(&[&[2, 3], &[3, 4]], 0), dlg(&[&[5]], 2), dlg(&[&[4, 4, 2]], 1)];
        let idf = fit_idf(&train, BowKind::Flattened, 6).unwrap();
        let feats: Vec<SparseVec> = train.iter().map(|d| bow_featurize(&d.sentences, BowKind::Flattened, &idf)).collect();
        let mut m = TfIdfModel::zeros(BowKind::Flattened, idf, 3);
        let mut rng = RngStream::new(3);
        for t in m.tensors_mut() {
            t.iter_mut().for_each(|v| *v = rng.uniform(-0.5, 0.5));
        }
        let batch: Vec<(&SparseVec, usize)> = feats.iter().zip(&train).map(|(f, d)| (f, d.label)).collect();
        let r = gradient_check(&m, |q| q.loss_and_grad(&batch), 1e-6).unwrap();
        assert!(r.passed, "{}", r.max_rel_error);
    }

    #[test]
    fn first_step_does_not_increase_loss() {
        let train = vec![dlg(&[&[2, 3]], 0), dlg(&[&[4]], 1), dlg(&[&[3, 5]], 0), dlg(&[&[5, 4]], 1)];
        let idf = fit_idf(&train, BowKind::Single, 6).unwrap();
        let feats: Vec<SparseVec> = train.iter().map(|d| bow_featurize(&d.sentences, BowKind::Single, &idf)).collect();
        let batch: Vec<(&SparseVec, usize)> = feats.iter().zip(&train).map(|(f, d)| (f, d.label)).collect();
        let mut m = TfIdfModel::zeros(BowKind::Single, idf, 2);
        let (before, g) = m.loss_and_grad(&batch).unwrap();
        let mut state = crate::nn::AdaDeltaState::new(&m, 0.95, 1e-6).unwrap();
        state.step(&mut m, &g).unwrap();
        let (after, _) = m.loss_and_grad(&batch).unwrap();
        assert!(after <= before);
    }

    #[test]
    fn empty_corpus_is_a_data_error() {
        assert!(matches!(
            bow_train(&[], BowKind::Single, 5, 2, &BowTrainConfig::default()),
            Err(Error::Data(_))
        ));
    }
}
