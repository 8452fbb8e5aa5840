use serde::{Deserialize, Serialize};

use super::rng::RngStream;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted dropout. In train mode each entry is zeroed with probability
/// `gamma` and survivors are scaled by `1 / (1 - gamma)`; eval mode is the
/// identity. The returned mask holds the per-entry multiplier.
pub fn dropout_forward(
    v: &[f64],
    gamma: f64,
    rng: &mut RngStream,
    mode: Mode,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Config(format!("dropout ratio {gamma} outside [0, 1)")));
    }
    if mode == Mode::Eval || gamma == 0.0 {
        return Ok((v.to_vec(), vec![1.0; v.len()]));
    }
    let keep = 1.0 / (1.0 - gamma);
    let mask: Vec<f64> = v
        .iter()
        .map(|_| if rng.bernoulli(gamma) { 0.0 } else { keep })
        .collect();
    let out = v.iter().zip(&mask).map(|(x, m)| x * m).collect();
    Ok((out, mask))
}

pub fn dropout_backward(grad_out: &[f64], mask: &[f64]) -> Vec<f64> {
    grad_out.iter().zip(mask).map(|(g, m)| g * m).collect()
}
