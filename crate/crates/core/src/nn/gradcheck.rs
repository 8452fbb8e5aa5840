//! Central finite-difference gradient checking.

use super::params::Parameters;
use crate::error::{Error, Result};

pub const FD_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Maximum over all scalars of `|a - n| / max(1e-8, |a| + |n|)`.
    pub max_rel_error: f64,
    /// `(tensor index, element index)` of the worst scalar.
    pub worst: (usize, usize),
    /// Analytic and numeric derivative at `worst`.
    pub worst_values: (f64, f64),
    pub checked: usize,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (1e-8f64).max(analytic.abs() + numeric.abs())
}

/// Compares the analytic gradient returned by `f` against central
/// differences on every scalar of `params`.
///
/// `f` maps a parameter set to `(loss, gradient)` and must be deterministic;
/// two evaluations at `params` are compared bitwise before any perturbation.
pub fn gradient_check<P, F>(params: &P, mut f: F, tolerance: f64) -> Result<GradCheckReport>
where
    P: Parameters,
    F: FnMut(&P) -> Result<(f64, P)>,
{
    let (loss_a, grads) = f(params)?;
    let (loss_b, grads_b) = f(params)?;
    let same_grads = grads
        .tensors()
        .iter()
        .zip(grads_b.tensors())
        .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
    if loss_a.to_bits() != loss_b.to_bits() || !same_grads {
        return Err(Error::Determinism(format!(
            "two evaluations disagree (loss {loss_a} vs {loss_b})"
        )));
    }
    if !grads.same_shape(params) {
        return Err(Error::shape("closure returned gradients of the wrong shape"));
    }

    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
    let mut probe = params.clone();
    let mut worst = (0, 0);
    let mut worst_values = (0.0, 0.0);
    let mut max_rel = 0.0f64;
    let mut checked = 0;
    for (ti, grad_t) in analytic.iter().enumerate() {
        for k in 0..grad_t.len() {
            let orig = probe.tensors()[ti][k];
            probe.tensors_mut()[ti][k] = orig + FD_EPSILON;
            let plus = f(&probe)?.0;
            probe.tensors_mut()[ti][k] = orig - FD_EPSILON;
            let minus = f(&probe)?.0;
            probe.tensors_mut()[ti][k] = orig;
            let numeric = (plus - minus) / (2.0 * FD_EPSILON);
            let rel = relative_error(grad_t[k], numeric);
            if rel > max_rel {
                max_rel = rel;
                worst = (ti, k);
                worst_values = (grad_t[k], numeric);
            }
            checked += 1;
        }
    }
    Ok(GradCheckReport {
        max_rel_error: max_rel,
        worst,
        worst_values,
        checked,
        passed: max_rel < tolerance,
    })
}
