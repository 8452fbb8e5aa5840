//! Ranking metrics (P@k, MRR), per-class P@1 and confusion matrices.
//!
//! Ties between equal probabilities are broken by class index: a class with
//! a lower index outranks the gold class when their probabilities are equal.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabelSet, LabeledDialogue};
use crate::encoders::model::Classifier;
use crate::error::{Error, Result};
use crate::nn::cross_entropy;

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probs: Vec<f64>,
    pub gold: usize,
}

impl Prediction {
    pub fn new(probs: Vec<f64>, gold: usize) -> Result<Self> {
        if gold >= probs.len() {
            return Err(Error::Label(format!("gold {gold} outside {} classes", probs.len())));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Numeric(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs, gold })
    }
}

/// 1-based rank of the gold class.
pub fn rank_of_gold(pred: &Prediction) -> usize {
    let g = pred.probs[pred.gold];
    1 + pred
        .probs
        .iter()
        .enumerate()
        .filter(|&(j, &p)| p > g || (p == g && j < pred.gold))
        .count()
}

/// Index of the highest probability, lowest index on ties.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = k;
        }
    }
    best
}

/// Class indices sorted by descending probability under the tie rule.
pub fn ranking(probs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    order
}

fn nonempty(preds: &[Prediction]) -> Result<()> {
    if preds.is_empty() {
        Err(Error::Data("no predictions to evaluate".into()))
    } else {
        Ok(())
    }
}

pub fn precision_at_k(preds: &[Prediction], k: usize) -> Result<f64> {
    nonempty(preds)?;
    let n_e = preds[0].probs.len();
    if k == 0 || k > n_e {
        return Err(Error::Config(format!("k = {k} outside 1..={n_e}")));
    }
    let hits = preds.iter().filter(|p| rank_of_gold(p) <= k).count();
    Ok(hits as f64 / preds.len() as f64)
}

pub fn mean_reciprocal_rank(preds: &[Prediction]) -> Result<f64> {
    nonempty(preds)?;
    Ok(reciprocal_rank_mean(preds.iter().map(rank_of_gold), preds[0].probs.len()))
}

/// Sums `count(rank) / rank` in ascending rank order, so the result does not
/// depend on the order of the predictions.
fn reciprocal_rank_mean(ranks: impl Iterator<Item = usize>, n_e: usize) -> f64 {
    let mut counts = vec![0usize; n_e + 1];
    let mut n = 0usize;
    for r in ranks {
        counts[r] += 1;
        n += 1;
    }
    let total: f64 = counts
        .iter()
        .enumerate()
        .skip(1)
        .map(|(r, &c)| c as f64 / r as f64)
        .sum();
    total / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub p_at_1: f64,
    pub p_at_3: f64,
    pub mrr: f64,
    /// P@1 restricted to examples of each gold class; classes without test
    /// examples are omitted.
    pub per_class_p1: BTreeMap<String, f64>,
    /// `confusion[gold][predicted]`, predictions by argmax.
    pub confusion: Vec<Vec<usize>>,
}

impl EvalReport {
    pub fn from_predictions(preds: &[Prediction], labels: &LabelSet) -> Result<Self> {
        nonempty(preds)?;
        let n_e = labels.len();
        if let Some(p) = preds.iter().find(|p| p.probs.len() != n_e) {
            return Err(Error::shape(format!(
                "prediction over {} classes for a label set of {n_e}",
                p.probs.len()
            )));
        }
        let mut confusion = vec![vec![0usize; n_e]; n_e];
        let mut class_hits = vec![0usize; n_e];
        let mut class_total = vec![0usize; n_e];
        for p in preds {
            confusion[p.gold][argmax(&p.probs)] += 1;
            class_total[p.gold] += 1;
            if rank_of_gold(p) == 1 {
                class_hits[p.gold] += 1;
            }
        }
        let per_class_p1 = (0..n_e)
            .filter(|&c| class_total[c] > 0)
            .map(|c| (labels.name(c).to_string(), class_hits[c] as f64 / class_total[c] as f64))
            .collect();
        Ok(Self {
            n: preds.len(),
            p_at_1: precision_at_k(preds, 1)?,
            p_at_3: precision_at_k(preds, 3.min(n_e))?,
            mrr: mean_reciprocal_rank(preds)?,
            per_class_p1,
            confusion,
        })
    }

    /// Canonical JSON: fixed field order, sorted class names, trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    /// One-line summary in percent with one decimal.
    pub fn summary(&self) -> String {
        format!(
            "n={} P@1={:.1} P@3={:.1} MRR={:.1}",
            self.n,
            100.0 * self.p_at_1,
            100.0 * self.p_at_3,
            100.0 * self.mrr
        )
    }
}

/// Per-emoji P@1 table, one column per named report, percentages with one
/// decimal. Classes missing from a report are shown as `-`.
pub fn per_class_table(labels: &LabelSet, columns: &[(&str, &EvalReport)]) -> String {
    let mut out = String::from("emoji");
    for (name, _) in columns {
        let _ = write!(out, "\t{name}");
    }
    out.push('\n');
    for name in labels.names() {
        out.push_str(name);
        for (_, r) in columns {
            match r.per_class_p1.get(name) {
                Some(v) => {
                    let _ = write!(out, "\t{:.1}", 100.0 * v);
                }
                None => out.push_str("\t-"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn predict_split(model: &Classifier, split: &[LabeledDialogue]) -> Result<Vec<Prediction>> {
    split
        .iter()
        .map(|d| Prediction::new(model.predict(&d.sentences)?, d.label))
        .collect()
}

/// Mean cross-entropy over `split` with dropout off.
pub fn mean_loss(model: &Classifier, split: &[LabeledDialogue]) -> Result<f64> {
    if split.is_empty() {
        return Err(Error::Data("cannot score an empty split".into()));
    }
    let mut total = 0.0;
    for d in split {
        total += cross_entropy(&model.predict(&d.sentences)?, d.label)?.loss;
    }
    Ok(total / split.len() as f64)
}

/// Runs inference with dropout off over `split` and assembles the report.
pub fn evaluate(model: &Classifier, split: &[LabeledDialogue], labels: &LabelSet) -> Result<EvalReport> {
    if split.is_empty() {
        return Err(Error::Data("cannot evaluate an empty split".into()));
    }
    if model.n_e() != labels.len() {
        return Err(Error::Config(format!(
            "model predicts {} classes but the label set has {}",
            model.n_e(),
            labels.len()
        )));
    }
    EvalReport::from_predictions(&predict_split(model, split)?, labels)
}
