//! KWIK linear regression and the model-based reinforcement-learning agents
//! built on it: reward learning in factored MDPs and effect-probability
//! learning for stochastic action schemas, plus an experiment harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fmdp;
pub mod harness;
pub mod kwik_lr;
pub mod planning;
pub mod schema;

pub use error::{Error, Result};
pub use kwik_lr::{compute_alpha0, KwikLrLearner, KwikParams, Prediction};
