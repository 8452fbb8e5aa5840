//! Forget-gate LSTM cell (no peepholes) with exact backpropagation through time.
//!
//! ```text
//! i  = σ(W_i x + U_i h_prev + b_i)
//! f  = σ(W_f x + U_f h_prev + b_f)
//! o  = σ(W_o x + U_o h_prev + b_o)
//! c̃  = tanh(W_c x + U_c h_prev + b_c)
//! c  = f ⊙ c_prev + i ⊙ c̃
//! h  = o ⊙ tanh(c)
//! ```

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::rng::RngStream;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input,
    Forget,
    Output,
    Candidate,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate];

    fn index(self) -> usize {
        self as usize
    }

    fn name(self) -> &'static str {
        match self {
            Gate::Input => "input",
            Gate::Forget => "forget",
            Gate::Output => "output",
            Gate::Candidate => "cand",
        }
    }
}

/// Weights of one LSTM layer. Arrays are indexed by [`Gate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    /// Input projections, `n_h × n_x`.
    pub w: [Matrix; 4],
    /// Recurrent projections, `n_h × n_h`.
    pub u: [Matrix; 4],
    pub b: [Vec<f64>; 4],
}

impl LstmParams {
    pub fn zeros(n_x: usize, n_h: usize) -> Self {
        Self {
            w: std::array::from_fn(|_| Matrix::zeros(n_h, n_x)),
            u: std::array::from_fn(|_| Matrix::zeros(n_h, n_h)),
            b: std::array::from_fn(|_| vec![0.0; n_h]),
        }
    }

    /// Uniform weights in `[-scale, scale]`, zero biases except the forget
    /// gate, which starts at `forget_bias`.
    pub fn random(n_x: usize, n_h: usize, scale: f64, forget_bias: f64, rng: &mut RngStream) -> Self {
        let mut p = Self::zeros(n_x, n_h);
        for g in Gate::ALL {
            for v in p.w[g.index()].as_mut_slice() {
                *v = rng.uniform(-scale, scale);
            }
            for v in p.u[g.index()].as_mut_slice() {
                *v = rng.uniform(-scale, scale);
            }
        }
        p.b[Gate::Forget.index()].fill(forget_bias);
        p
    }

    pub fn n_x(&self) -> usize {
        self.w[0].cols()
    }

    pub fn n_h(&self) -> usize {
        self.w[0].rows()
    }

    pub fn w(&self, g: Gate) -> &Matrix {
        &self.w[g.index()]
    }

    pub fn w_mut(&mut self, g: Gate) -> &mut Matrix {
        &mut self.w[g.index()]
    }

    pub fn u(&self, g: Gate) -> &Matrix {
        &self.u[g.index()]
    }

    pub fn u_mut(&mut self, g: Gate) -> &mut Matrix {
        &mut self.u[g.index()]
    }

    pub fn b(&self, g: Gate) -> &[f64] {
        &self.b[g.index()]
    }

    pub fn b_mut(&mut self, g: Gate) -> &mut Vec<f64> {
        &mut self.b[g.index()]
    }

    /// Checks that all twelve tensors agree on one `(n_x, n_h)` pair.
    pub fn validate(&self) -> Result<()> {
        let (n_x, n_h) = (self.n_x(), self.n_h());
        for g in Gate::ALL {
            if self.w(g).shape() != (n_h, n_x) || self.u(g).shape() != (n_h, n_h) || self.b(g).len() != n_h {
                return Err(Error::shape(format!(
                    "{} gate tensors inconsistent with n_x={n_x}, n_h={n_h}",
                    g.name()
                )));
            }
        }
        Ok(())
    }

    /// Flat views in canonical order: W per gate, U per gate, b per gate.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(12);
        out.extend(self.w.iter().map(Matrix::as_slice));
        out.extend(self.u.iter().map(Matrix::as_slice));
        out.extend(self.b.iter().map(Vec::as_slice));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(12);
        out.extend(self.w.iter_mut().map(Matrix::as_mut_slice));
        out.extend(self.u.iter_mut().map(Matrix::as_mut_slice));
        out.extend(self.b.iter_mut().map(Vec::as_mut_slice));
        out
    }

    /// `(name, shape)` for each entry of [`LstmParams::tensors`].
    pub fn tensor_specs(&self, prefix: &str) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::with_capacity(12);
        for g in Gate::ALL {
            let (r, c) = self.w(g).shape();
            out.push((format!("{prefix}.w_{}", g.name()), vec![r, c]));
        }
        for g in Gate::ALL {
            let (r, c) = self.u(g).shape();
            out.push((format!("{prefix}.u_{}", g.name()), vec![r, c]));
        }
        for g in Gate::ALL {
            out.push((format!("{prefix}.b_{}", g.name()), vec![self.b(g).len()]));
        }
        out
    }
}

/// Hidden and cell state after one step, with the gate activations kept for
/// the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmStep {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub o: Vec<f64>,
    pub c_tilde: Vec<f64>,
}

impl LstmStep {
    /// A pseudo-step carrying only a state; gate caches are zero.
    pub fn from_state(h: Vec<f64>, c: Vec<f64>) -> Self {
        let n = h.len();
        Self {
            h,
            c,
            i: vec![0.0; n],
            f: vec![0.0; n],
            o: vec![0.0; n],
            c_tilde: vec![0.0; n],
        }
    }

    pub fn zero(n_h: usize) -> Self {
        Self::from_state(vec![0.0; n_h], vec![0.0; n_h])
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite value in {what}")))
    }
}

pub fn lstm_cell_forward(x: &[f64], prev: &LstmStep, params: &LstmParams) -> Result<LstmStep> {
    let n_h = params.n_h();
    if x.len() != params.n_x() {
        return Err(Error::shape(format!("input of length {} for n_x={}", x.len(), params.n_x())));
    }
    if prev.h.len() != n_h || prev.c.len() != n_h {
        return Err(Error::shape(format!("previous state of length {} for n_h={n_h}", prev.h.len())));
    }
    check_finite(x, "lstm input")?;

    let pre = |g: Gate| {
        let mut a = params.b(g).to_vec();
        params.w(g).matvec_add(x, &mut a);
        params.u(g).matvec_add(&prev.h, &mut a);
        a
    };
    let mut i = pre(Gate::Input);
    let mut f = pre(Gate::Forget);
    let mut o = pre(Gate::Output);
    let mut c_tilde = pre(Gate::Candidate);
    i.iter_mut().for_each(|v| *v = sigmoid(*v));
    f.iter_mut().for_each(|v| *v = sigmoid(*v));
    o.iter_mut().for_each(|v| *v = sigmoid(*v));
    c_tilde.iter_mut().for_each(|v| *v = v.tanh());

    let c: Vec<f64> = (0..n_h).map(|k| f[k] * prev.c[k] + i[k] * c_tilde[k]).collect();
    let h: Vec<f64> = (0..n_h).map(|k| o[k] * c[k].tanh()).collect();
    check_finite(&h, "lstm hidden state")?;
    Ok(LstmStep { h, c, i, f, o, c_tilde })
}

/// Steps of a forward pass over one sequence, plus its initial state.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    pub h0: Vec<f64>,
    pub c0: Vec<f64>,
    pub steps: Vec<LstmStep>,
}

impl LstmTrace {
    pub fn last(&self) -> &LstmStep {
        self.steps.last().expect("trace is never empty")
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    fn prev_state(&self, t: usize) -> (&[f64], &[f64]) {
        if t == 0 {
            (&self.h0, &self.c0)
        } else {
            (&self.steps[t - 1].h, &self.steps[t - 1].c)
        }
    }
}

pub fn lstm_sequence_forward<X: AsRef<[f64]>>(
    xs: &[X],
    params: &LstmParams,
    h0: &[f64],
    c0: &[f64],
) -> Result<LstmTrace> {
    if xs.is_empty() {
        return Err(Error::EmptyInput("lstm sequence has no steps".into()));
    }
    let mut steps: Vec<LstmStep> = Vec::with_capacity(xs.len());
    let init = LstmStep::from_state(h0.to_vec(), c0.to_vec());
    for x in xs {
        let step = lstm_cell_forward(x.as_ref(), steps.last().unwrap_or(&init), params)?;
        steps.push(step);
    }
    Ok(LstmTrace {
        h0: h0.to_vec(),
        c0: c0.to_vec(),
        steps,
    })
}

/// Gradients flowing out of a sequence into its inputs and initial state.
#[derive(Debug, Clone)]
pub struct LstmInputGrads {
    pub xs: Vec<Vec<f64>>,
    pub h0: Vec<f64>,
    pub c0: Vec<f64>,
}

/// Backpropagation through time. Parameter gradients are added into `grads`.
pub fn lstm_sequence_backward<X: AsRef<[f64]>>(
    trace: &LstmTrace,
    xs: &[X],
    params: &LstmParams,
    grad_last_h: &[f64],
    grads: &mut LstmParams,
) -> Result<LstmInputGrads> {
    let n_h = params.n_h();
    let n_x = params.n_x();
    if trace.len() != xs.len() {
        return Err(Error::shape(format!(
            "trace of {} steps for {} inputs",
            trace.len(),
            xs.len()
        )));
    }
    if grad_last_h.len() != n_h {
        return Err(Error::shape(format!("upstream gradient of length {} for n_h={n_h}", grad_last_h.len())));
    }
    if grads.n_x() != n_x || grads.n_h() != n_h {
        return Err(Error::shape("gradient buffers do not match parameters"));
    }

    let mut dxs = vec![vec![0.0; n_x]; xs.len()];
    let mut dh = grad_last_h.to_vec();
    let mut dc_next = vec![0.0; n_h];
    let mut da: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; n_h]);

    for t in (0..xs.len()).rev() {
        let step = &trace.steps[t];
        let x = xs[t].as_ref();
        let (h_prev, c_prev) = trace.prev_state(t);
        let mut dc_prev = vec![0.0; n_h];
        for k in 0..n_h {
            let tc = step.c[k].tanh();
            let d_o = dh[k] * tc;
            let dc = dc_next[k] + dh[k] * step.o[k] * (1.0 - tc * tc);
            let d_i = dc * step.c_tilde[k];
            let d_f = dc * c_prev[k];
            let d_ct = dc * step.i[k];
            dc_prev[k] = dc * step.f[k];
            da[Gate::Input.index()][k] = d_i * step.i[k] * (1.0 - step.i[k]);
            da[Gate::Forget.index()][k] = d_f * step.f[k] * (1.0 - step.f[k]);
            da[Gate::Output.index()][k] = d_o * step.o[k] * (1.0 - step.o[k]);
            da[Gate::Candidate.index()][k] = d_ct * (1.0 - step.c_tilde[k] * step.c_tilde[k]);
        }
        let mut dh_prev = vec![0.0; n_h];
        for g in Gate::ALL {
            let a = &da[g.index()];
            grads.w_mut(g).add_outer(a, x);
            grads.u_mut(g).add_outer(a, h_prev);
            for (b, d) in grads.b_mut(g).iter_mut().zip(a) {
                *b += d;
            }
            params.w(g).matvec_transpose_add(a, &mut dxs[t]);
            params.u(g).matvec_transpose_add(a, &mut dh_prev);
        }
        dh = dh_prev;
        dc_next = dc_prev;
    }

    Ok(LstmInputGrads {
        xs: dxs,
        h0: dh,
        c0: dc_next,
    })
}
