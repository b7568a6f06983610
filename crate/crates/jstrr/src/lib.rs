//! Joint sentiment-topic modeling of review texts and numerical ratings.
//!
//! Reviews are modeled as bags of word tokens and rating tokens sharing a
//! document-level sentiment distribution; words additionally carry
//! sentiment-conditional topics. Inference is collapsed Gibbs sampling
//! with a configurable weight `sigma` that scales how much a rating counts
//! relative to a word when estimating document sentiment (`sigma = 0`
//! ignores ratings entirely). The crate also ships held-out perplexity
//! scoring, cross-validation for `sigma`, and a synthetic-corpus harness
//! that measures how well document sentiment is recovered.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with zero.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod priors;
pub mod rng;
pub mod sampler;
pub mod simulate;
pub mod stem;

pub use error::{Error, Result};
