//! Dense numerical kernel: matrices, the LSTM cell, softmax and
//! cross-entropy, dropout, AdaDelta and a finite-difference checker.

pub mod adadelta;
pub mod dropout;
pub mod gradcheck;
pub mod loss;
pub mod lstm;
pub mod matrix;
pub mod params;
pub mod rng;

pub use adadelta::{AdaDeltaState, DEFAULT_EPSILON, DEFAULT_RHO};
pub use dropout::{dropout_backward, dropout_forward, Mode};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use loss::{cross_entropy, softmax, CrossEntropy};
pub use lstm::{
    lstm_cell_forward, lstm_sequence_backward, lstm_sequence_forward, Gate, LstmInputGrads,
    LstmParams, LstmStep, LstmTrace,
};
pub use matrix::Matrix;
pub use params::{clip_global_norm, Parameters};
pub use rng::{RngState, RngStream};
