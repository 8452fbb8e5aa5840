//! AdaDelta: per-scalar adaptive steps from decayed averages of squared
//! gradients and squared updates.
//!
//! ```text
//! E[g²]  ← ρ E[g²] + (1 − ρ) g²
//! Δx     = −( √(E[Δx²] + ε) / √(E[g²] + ε) ) g
//! E[Δx²] ← ρ E[Δx²] + (1 − ρ) Δx²
//! x      ← x + Δx
//! ```

use serde::{Deserialize, Serialize};

use super::params::Parameters;
use crate::error::{Error, Result};

pub const DEFAULT_RHO: f64 = 0.95;
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaDeltaState {
    pub rho: f64,
    pub epsilon: f64,
    pub acc_sq_grad: Vec<Vec<f64>>,
    pub acc_sq_update: Vec<Vec<f64>>,
}

impl AdaDeltaState {
    /// Fresh (all-zero) accumulators shaped like `params`.
    pub fn new<P: Parameters>(params: &P, rho: f64, epsilon: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Config(format!("rho {rho} outside (0, 1)")));
        }
        if !(epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon {epsilon} must be positive")));
        }
        let shapes: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Ok(Self {
            rho,
            epsilon,
            acc_sq_grad: shapes.clone(),
            acc_sq_update: shapes,
        })
    }

    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let grads = grads.tensors();
        let mut params = params.tensors_mut();
        if grads.len() != params.len() || params.len() != self.acc_sq_grad.len() {
            return Err(Error::shape(format!(
                "{} parameter tensors, {} gradient tensors, {} accumulators",
                params.len(),
                grads.len(),
                self.acc_sq_grad.len()
            )));
        }
        for (k, (p, g)) in params.iter().zip(&grads).enumerate() {
            if p.len() != g.len() || p.len() != self.acc_sq_grad[k].len() {
                return Err(Error::shape(format!("tensor {k} has mismatched length")));
            }
        }
        let (rho, eps) = (self.rho, self.epsilon);
        for (k, (p, g)) in params.iter_mut().zip(&grads).enumerate() {
            let eg = &mut self.acc_sq_grad[k];
            let ex = &mut self.acc_sq_update[k];
            for j in 0..p.len() {
                let gj = g[j];
                eg[j] = rho * eg[j] + (1.0 - rho) * gj * gj;
                let dx = -((ex[j] + eps).sqrt() / (eg[j] + eps).sqrt()) * gj;
                ex[j] = rho * ex[j] + (1.0 - rho) * dx * dx;
                p[j] += dx;
            }
        }
        Ok(())
    }
}
