//! Guided autogenic-training engine: a simulated phoneme digitiser, n-gram
//! phoneme models with threshold pruning, a noisy-channel word decoder, three
//! interchangeable associative networks (Hopfield, Boltzmann, perceptron),
//! case-based inference with Bayesian response correlation, an evaluation
//! harness and the session state machine.

pub mod error;
pub mod seed;
pub mod phoneme;
pub mod ngram;
pub mod decode;
pub mod nets;
pub mod output;
pub mod cbr;
pub mod eval;
pub mod session;

pub use error::{Error, Result};
