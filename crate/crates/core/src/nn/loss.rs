use crate::error::{Error, Result};

/// Floor applied to the gold probability before taking its log.
pub const LOG_FLOOR: f64 = 1e-12;

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::EmptyInput("softmax of an empty vector".into()));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite logit".into()));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
    Ok(out)
}

/// Loss and gradient with respect to the logits that produced `probs`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossEntropy {
    pub loss: f64,
    pub grad_logits: Vec<f64>,
}

/// `-ln probs[gold]` with the fused softmax gradient `probs - one_hot(gold)`.
pub fn cross_entropy(probs: &[f64], gold: usize) -> Result<CrossEntropy> {
    if gold >= probs.len() {
        return Err(Error::Label(format!(
            "gold label {gold} outside {} classes",
            probs.len()
        )));
    }
    let loss = -probs[gold].max(LOG_FLOOR).ln();
    let mut grad_logits = probs.to_vec();
    grad_logits[gold] -= 1.0;
    Ok(CrossEntropy {
        loss: loss.max(0.0),
        grad_logits,
    })
}
