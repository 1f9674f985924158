//! Core algorithms for building speech recognizers in low-resource,
//! multilingual settings.
//!
//! Everything in this crate is pure computation over in-memory data and
//! needs only `alloc`. File formats, audio IO and the command line live in
//! the companion `asrkit` crate.
//!
//! The main pieces:
//!
//! - [`corpus`]: resampling to 16 kHz mono, voice activity detection,
//!   WADA-SNR estimation, SNR filtering and chunking of raw audio.
//! - [`sampler`]: temperature-based sampling of languages for multilingual
//!   batches.
//! - [`script`]: offset-based transliteration between Indic scripts and
//!   Devanagari.
//! - [`ngram`]: modified Kneser-Ney n-gram training, pruning and backoff
//!   queries.
//! - [`lexicon`], [`ctc`], [`decoder`]: lexicon-constrained CTC beam search
//!   with n-gram fusion.
//! - [`tuning`]: decoder weight grid search and n-best rescoring.
//! - [`metrics`]: word and character error rates.
//! - [`analysis`]: codebook usage, layer centroids and attention
//!   aggregation over aligned spans.

#![no_std]
#![forbid(unsafe_code)]
// negated float comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod corpus;
pub mod ctc;
pub mod decoder;
pub mod lexicon;
pub mod math;
pub mod metrics;
pub mod ngram;
pub mod sampler;
pub mod script;
pub mod tuning;
