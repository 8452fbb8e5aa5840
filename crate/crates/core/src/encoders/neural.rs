//! LSTM dialogue encoders and the softmax classifier head.
//!
//! A dialogue is a slice of token-id sentences whose last entry is the reply.

use super::config::EncoderKind;
use super::params::ParameterSet;
use crate::error::{Error, Result};
use crate::nn::{
    cross_entropy, dropout_backward, dropout_forward, lstm_sequence_backward, lstm_sequence_forward,
    softmax, LstmParams, LstmTrace, Mode, RngStream,
};

/// Fixed-size summary of a dialogue fed to the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct DialogueRepresentation(Vec<f64>);

impl DialogueRepresentation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Everything the backward pass needs from an encoder forward pass.
#[derive(Debug, Clone)]
pub enum EncodeTrace {
    /// Reply-only and flattened encoders: one word-level sequence.
    Sequence { tokens: Vec<u32>, trace: LstmTrace },
    Hierarchical {
        sentences: Vec<(Vec<u32>, LstmTrace)>,
        reps: Vec<Vec<f64>>,
        top: LstmTrace,
    },
}

fn embed<'a>(tokens: &[u32], params: &'a ParameterSet) -> Result<Vec<&'a [f64]>> {
    let vocab = params.vocab_size();
    tokens
        .iter()
        .map(|&t| {
            if (t as usize) < vocab {
                Ok(params.embeddings.row(t as usize))
            } else {
                Err(Error::shape(format!("token id {t} outside vocabulary of {vocab}")))
            }
        })
        .collect()
}

fn run_words(tokens: Vec<u32>, params: &ParameterSet) -> Result<(Vec<u32>, LstmTrace)> {
    let n_h = params.n_h();
    let xs = embed(&tokens, params)?;
    let zero = vec![0.0; n_h];
    let trace = lstm_sequence_forward(&xs, &params.word_lstm, &zero, &zero)?;
    Ok((tokens, trace))
}

fn sentence_lstm(params: &ParameterSet) -> Result<&LstmParams> {
    params
        .sentence_lstm
        .as_ref()
        .ok_or_else(|| Error::Config("hierarchical encoder needs sentence-level LSTM parameters".into()))
}

pub fn encode_traced<S: AsRef<[u32]>>(
    kind: EncoderKind,
    sentences: &[S],
    params: &ParameterSet,
) -> Result<(DialogueRepresentation, EncodeTrace)> {
    let Some(reply) = sentences.last() else {
        return Err(Error::EmptyInput("dialogue has no sentences".into()));
    };
    match kind {
        EncoderKind::Single => {
            if reply.as_ref().is_empty() {
                return Err(Error::EmptyInput("reply sentence is empty".into()));
            }
            let (tokens, trace) = run_words(reply.as_ref().to_vec(), params)?;
            let d = DialogueRepresentation(trace.last().h.clone());
            Ok((d, EncodeTrace::Sequence { tokens, trace }))
        }
        EncoderKind::Flattened => {
            let flat: Vec<u32> = sentences.iter().flat_map(|s| s.as_ref().iter().copied()).collect();
            if flat.is_empty() {
                return Err(Error::EmptyInput("every sentence is empty".into()));
            }
            let (tokens, trace) = run_words(flat, params)?;
            let d = DialogueRepresentation(trace.last().h.clone());
            Ok((d, EncodeTrace::Sequence { tokens, trace }))
        }
        EncoderKind::Hierarchical => {
            let upper = sentence_lstm(params)?;
            let mut word_traces = Vec::with_capacity(sentences.len());
            for (k, s) in sentences.iter().enumerate() {
                if s.as_ref().is_empty() {
                    return Err(Error::EmptyInput(format!("sentence {k} is empty")));
                }
                word_traces.push(run_words(s.as_ref().to_vec(), params)?);
            }
            let reps: Vec<Vec<f64>> = word_traces.iter().map(|(_, t)| t.last().h.clone()).collect();
            let zero = vec![0.0; params.n_h()];
            let top = lstm_sequence_forward(&reps, upper, &zero, &zero)?;
            let d = DialogueRepresentation(top.last().h.clone());
            Ok((
                d,
                EncodeTrace::Hierarchical {
                    sentences: word_traces,
                    reps,
                    top,
                },
            ))
        }
        EncoderKind::BowSingle | EncoderKind::BowFlattened => Err(Error::Config(format!(
            "{kind} is not a neural encoder"
        ))),
    }
}

pub fn encode<S: AsRef<[u32]>>(
    kind: EncoderKind,
    sentences: &[S],
    params: &ParameterSet,
) -> Result<DialogueRepresentation> {
    encode_traced(kind, sentences, params).map(|(d, _)| d)
}

/// Last hidden state of the word LSTM over the reply sentence.
pub fn encode_single<S: AsRef<[u32]>>(sentences: &[S], params: &ParameterSet) -> Result<DialogueRepresentation> {
    encode(EncoderKind::Single, sentences, params)
}

/// Last hidden state of the word LSTM over all sentences concatenated.
pub fn encode_flattened<S: AsRef<[u32]>>(sentences: &[S], params: &ParameterSet) -> Result<DialogueRepresentation> {
    encode(EncoderKind::Flattened, sentences, params)
}

/// Word LSTM per sentence from a zero state, then the sentence LSTM over the
/// per-sentence last hidden states.
pub fn encode_hierarchical<S: AsRef<[u32]>>(
    sentences: &[S],
    params: &ParameterSet,
) -> Result<DialogueRepresentation> {
    encode(EncoderKind::Hierarchical, sentences, params)
}

fn scatter_embedding_grads(tokens: &[u32], dxs: &[Vec<f64>], grads: &mut ParameterSet) {
    for (&t, dx) in tokens.iter().zip(dxs) {
        for (g, d) in grads.embeddings.row_mut(t as usize).iter_mut().zip(dx) {
            *g += d;
        }
    }
}

/// Accumulates encoder gradients for an upstream gradient on `d`.
pub fn encoder_backward(
    trace: &EncodeTrace,
    params: &ParameterSet,
    grad_d: &[f64],
    grads: &mut ParameterSet,
) -> Result<()> {
    match trace {
        EncodeTrace::Sequence { tokens, trace } => {
            let xs = embed(tokens, params)?;
            let dx = lstm_sequence_backward(trace, &xs, &params.word_lstm, grad_d, &mut grads.word_lstm)?;
            scatter_embedding_grads(tokens, &dx.xs, grads);
        }
        EncodeTrace::Hierarchical { sentences, reps, top } => {
            let upper = sentence_lstm(params)?;
            let upper_grads = grads
                .sentence_lstm
                .as_mut()
                .ok_or_else(|| Error::shape("gradient buffers lack a sentence-level LSTM"))?;
            let d_reps = lstm_sequence_backward(top, reps, upper, grad_d, upper_grads)?;
            for ((tokens, trace), d_rep) in sentences.iter().zip(&d_reps.xs) {
                let xs = embed(tokens, params)?;
                let dx = lstm_sequence_backward(trace, &xs, &params.word_lstm, d_rep, &mut grads.word_lstm)?;
                scatter_embedding_grads(tokens, &dx.xs, grads);
            }
        }
    }
    Ok(())
}

/// Forward state of the classifier head for one example.
#[derive(Debug, Clone)]
pub struct ClassifierTrace {
    pub input: Vec<f64>,
    pub mask: Vec<f64>,
    pub probs: Vec<f64>,
}

pub fn classify_traced(
    d: &DialogueRepresentation,
    params: &ParameterSet,
    gamma: f64,
    rng: &mut RngStream,
    mode: Mode,
) -> Result<ClassifierTrace> {
    if d.0.len() != params.classifier_w.cols() {
        return Err(Error::shape(format!(
            "representation of length {} for a classifier over {} features",
            d.0.len(),
            params.classifier_w.cols()
        )));
    }
    let (input, mask) = dropout_forward(&d.0, gamma, rng, mode)?;
    let mut logits = params.classifier_b.clone();
    params.classifier_w.matvec_add(&input, &mut logits);
    let probs = softmax(&logits)?;
    Ok(ClassifierTrace { input, mask, probs })
}

/// Dropout on `d` (train mode only), then `softmax(W_s d + b_s)`.
pub fn classify(
    d: &DialogueRepresentation,
    params: &ParameterSet,
    gamma: f64,
    rng: &mut RngStream,
    mode: Mode,
) -> Result<Vec<f64>> {
    classify_traced(d, params, gamma, rng, mode).map(|t| t.probs)
}

/// Accumulates head gradients and returns the gradient on `d`.
pub fn classifier_backward(
    trace: &ClassifierTrace,
    grad_logits: &[f64],
    params: &ParameterSet,
    grads: &mut ParameterSet,
) -> Vec<f64> {
    grads.classifier_w.add_outer(grad_logits, &trace.input);
    for (b, g) in grads.classifier_b.iter_mut().zip(grad_logits) {
        *b += g;
    }
    let mut d_input = vec![0.0; trace.input.len()];
    params.classifier_w.matvec_transpose_add(grad_logits, &mut d_input);
    dropout_backward(&d_input, &trace.mask)
}

/// Class probabilities with dropout off.
pub fn predict<S: AsRef<[u32]>>(kind: EncoderKind, sentences: &[S], params: &ParameterSet) -> Result<Vec<f64>> {
    let d = encode(kind, sentences, params)?;
    let mut unused = RngStream::new(0);
    classify(&d, params, 0.0, &mut unused, Mode::Eval)
}

/// Cross-entropy of one example; gradients scaled by `weight` are added
/// into `grads`.
#[allow(clippy::too_many_arguments)]
pub fn example_loss_and_grad<S: AsRef<[u32]>>(
    kind: EncoderKind,
    sentences: &[S],
    gold: usize,
    params: &ParameterSet,
    gamma: f64,
    rng: &mut RngStream,
    mode: Mode,
    weight: f64,
    grads: &mut ParameterSet,
) -> Result<f64> {
    let (d, enc_trace) = encode_traced(kind, sentences, params)?;
    let head = classify_traced(&d, params, gamma, rng, mode)?;
    let ce = cross_entropy(&head.probs, gold)?;
    let grad_logits: Vec<f64> = ce.grad_logits.iter().map(|g| g * weight).collect();
    let grad_d = classifier_backward(&head, &grad_logits, params, grads);
    encoder_backward(&enc_trace, params, &grad_d, grads)?;
    Ok(ce.loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::ModelConfig;
    use crate::nn::{gradient_check, lstm_cell_forward, LstmStep, Parameters};

    fn config(kind: EncoderKind, n: usize) -> ModelConfig {
        ModelConfig::new(kind, 12, 3).with_dims(n, n)
    }

    fn random(kind: EncoderKind, n: usize, seed: u64) -> ParameterSet {
        ParameterSet::init_with_scale(&config(kind, n), 0.5, &mut RngStream::new(seed)).unwrap()
    }

    #[test]
    fn single_sentence_single_equals_flattened() {
        let p = random(EncoderKind::Single, 4, 1);
        let dlg = [vec![3u32, 4, 5]];
        assert_eq!(encode_single(&dlg, &p).unwrap(), encode_flattened(&dlg, &p).unwrap());
    }

    #[test]
    fn flattening_concatenates() {
        let p = random(EncoderKind::Flattened, 4, 2);
        let two = [vec![3u32], vec![7u32]];
        let one = [vec![3u32, 7]];
        assert_eq!(encode_flattened(&two, &p).unwrap(), encode_single(&one, &p).unwrap());
    }

    #[test]
    fn zero_params_give_zero_representation() {
        for kind in [EncoderKind::Single, EncoderKind::Flattened, EncoderKind::Hierarchical] {
            let p = ParameterSet::zeros(&config(kind, 3));
            let d = encode(kind, &[vec![1u32, 2], vec![4u32]], &p).unwrap();
            assert_eq!(d.as_slice(), &[0.0; 3]);
        }
    }

    #[test]
    fn single_matches_two_step_hand_trace() {
        // n_x = n_h = 1; every weight 0.3, recurrent 0.6, biases zero
        let mut p = ParameterSet::zeros(&config(EncoderKind::Single, 1));
        for g in crate::nn::Gate::ALL {
            p.word_lstm.w_mut(g).set(0, 0, 0.3);
            p.word_lstm.u_mut(g).set(0, 0, 0.6);
        }
        p.embeddings.set(2, 0, 1.5);
        p.embeddings.set(5, 0, -0.5);
        let s = |z: f64| 1.0 / (1.0 + (-z).exp());
        let (mut h, mut c) = (0.0f64, 0.0f64);
        for x in [1.5f64, -0.5] {
            let a = 0.3 * x + 0.6 * h;
            c = s(a) * c + s(a) * a.tanh();
            h = s(a) * c.tanh();
        }
        let d = encode_single(&[vec![9u32], vec![2u32, 5]], &p).unwrap();
        assert!((d.as_slice()[0] - h).abs() < 1e-12);
    }

    #[test]
    fn hierarchical_one_sentence_is_one_upper_step() {
        let p = random(EncoderKind::Hierarchical, 4, 3);
        let dlg = [vec![1u32, 2, 3]];
        let single = encode_single(&dlg, &p).unwrap();
        let step = lstm_cell_forward(single.as_slice(), &LstmStep::zero(4), p.sentence_lstm.as_ref().unwrap()).unwrap();
        let h = encode_hierarchical(&dlg, &p).unwrap();
        for (a, b) in h.as_slice().iter().zip(&step.h) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn context_sensitivity() {
        let a = [vec![1u32, 2], vec![3u32, 4]];
        let b = [vec![6u32, 7], vec![3u32, 4]];
        let p = random(EncoderKind::Hierarchical, 4, 4);
        assert_eq!(encode_single(&a, &p).unwrap(), encode_single(&b, &p).unwrap());
        assert_ne!(encode_flattened(&a, &p).unwrap(), encode_flattened(&b, &p).unwrap());
        assert_ne!(encode_hierarchical(&a, &p).unwrap(), encode_hierarchical(&b, &p).unwrap());
    }

    #[test]
    fn shared_word_weights_affect_every_sentence() {
        let p = random(EncoderKind::Hierarchical, 3, 5);
        let dlg = [vec![1u32, 2], vec![3u32], vec![4u32, 5]];
        let (_, before) = encode_traced(EncoderKind::Hierarchical, &dlg, &p).unwrap();
        let mut q = p.clone();
        q.word_lstm.w_mut(crate::nn::Gate::Candidate).as_mut_slice()[0] += 0.1;
        let (_, after) = encode_traced(EncoderKind::Hierarchical, &dlg, &q).unwrap();
        let (EncodeTrace::Hierarchical { reps: r0, .. }, EncodeTrace::Hierarchical { reps: r1, .. }) = (before, after)
        else {
            panic!("expected hierarchical traces")
        };
        for (x, y) in r0.iter().zip(&r1) {
            assert_ne!(x, y);
        }
    }

    #[test]
    fn encoder_errors() {
        let p = random(EncoderKind::Flattened, 3, 6);
        let none: [Vec<u32>; 0] = [];
        assert!(matches!(encode_single(&none, &p), Err(Error::EmptyInput(_))));
        assert!(matches!(encode_single(&[vec![1u32], vec![]], &p), Err(Error::EmptyInput(_))));
        assert!(matches!(encode_flattened(&[Vec::<u32>::new(), vec![]], &p), Err(Error::EmptyInput(_))));
        assert!(matches!(encode_hierarchical(&[vec![1u32]], &p), Err(Error::Config(_))));
        assert!(matches!(encode_single(&[vec![99u32]], &p), Err(Error::Shape(_))));
        let h = random(EncoderKind::Hierarchical, 3, 6);
        assert!(matches!(encode_hierarchical(&[vec![], vec![1u32]], &h), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn classifier_head_cases() {
        let mut p = ParameterSet::zeros(&ModelConfig::new(EncoderKind::Single, 5, 10).with_dims(2, 3));
        let d = DialogueRepresentation(vec![0.4, -1.0, 2.0]);
        let mut rng = RngStream::new(0);
        let probs = classify(&d, &p, 0.5, &mut rng, Mode::Train).unwrap();
        assert!(probs.iter().all(|&q| (q - 0.1).abs() < 1e-15));
        p.classifier_b[0] = 10.0;
        let probs = classify(&d, &p, 0.0, &mut rng, Mode::Eval).unwrap();
        assert!(probs[0] > 0.99);

        let q = random(EncoderKind::Single, 3, 7);
        let probs = classify(&d, &q, 0.5, &mut rng, Mode::Eval).unwrap();
        let logits: Vec<f64> = (0..3)
            .map(|r| q.classifier_b[r] + (0..3).map(|c| q.classifier_w.get(r, c) * d.0[c]).sum::<f64>())
            .collect();
        let m = logits.iter().cloned().fold(f64::MIN, f64::max);
        let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
        for (pr, l) in probs.iter().zip(&logits) {
            assert!((pr - (l - m).exp() / z).abs() < 1e-12);
        }
        assert!(matches!(
            classify(&DialogueRepresentation(vec![1.0]), &q, 0.0, &mut rng, Mode::Eval),
            Err(Error::Shape(_))
        ));
    }

    fn check(kind: EncoderKind, dlg: &[Vec<u32>], n: usize, seed: u64) -> f64 {
        let p = random(kind, n, seed);
        let report = gradient_check(
            &p,
            |q| {
                let mut g = q.zeros_like();
                let mut rng = RngStream::new(0);
                let loss = example_loss_and_grad(kind, dlg, 1, q, 0.0, &mut rng, Mode::Eval, 1.0, &mut g)?;
                Ok((loss, g))
            },
            1e-4,
        )
        .unwrap();
        report.max_rel_error
    }

    #[test]
    fn flattened_gradient_check() {
        let dlg = vec![vec![1u32, 2], vec![3u32, 4, 5], vec![6u32]];
        assert!(check(EncoderKind::Flattened, &dlg, 3, 8) < 1e-4);
    }

    #[test]
    fn hierarchical_gradient_check_reaches_first_sentence_embeddings() {
        let dlg = vec![vec![1u32, 2], vec![3u32, 4]];
        assert!(check(EncoderKind::Hierarchical, &dlg, 2, 9) < 1e-4);
        let p = random(EncoderKind::Hierarchical, 2, 9);
        let mut g = p.zeros_like();
        example_loss_and_grad(EncoderKind::Hierarchical, &dlg, 1, &p, 0.0, &mut RngStream::new(0), Mode::Eval, 1.0, &mut g)
            .unwrap();
        assert!(g.embeddings.row(1).iter().any(|&v| v != 0.0));
        assert!(g.embeddings.row(7).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dropout_gradient_check_with_fixed_mask() {
        // Re-seeding per call freezes the mask so the closure is deterministic.
        let dlg = vec![vec![1u32, 2, 3]];
        let p = random(EncoderKind::Single, 4, 10);
        let r = gradient_check(
            &p,
            |q| {
                let mut g = q.zeros_like();
                let mut rng = RngStream::new(77);
                let l = example_loss_and_grad(EncoderKind::Single, &dlg, 0, q, 0.5, &mut rng, Mode::Train, 1.0, &mut g)?;
                Ok((l, g))
            },
            1e-4,
        )
        .unwrap();
        assert!(r.passed, "{}", r.max_rel_error);
    }
}
