//! Backoff n-gram language models.
//!
//! Training uses interpolated modified Kneser-Ney smoothing with discounts
//! estimated from counts-of-counts; see [`train`]. Queries follow ARPA
//! backoff semantics. Stored scores are log10.

mod model;
mod train;
mod vocab;

pub use model::{Entry, LmState, NGramModel};
pub use train::{train, Discounts, NGramCounts, PruneConfig, TrainReport, Trained, FALLBACK_DISCOUNT};
pub use vocab::{Vocab, WordId, BOS, EOS, UNK};

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NGramError {
    #[error("order must be between 1 and {max}, got {got}")]
    InvalidOrder { got: usize, max: usize },
    #[error("training corpus has no tokens")]
    EmptyCorpus,
    #[error("prune thresholds must be non-decreasing: {0:?}")]
    InvalidPrune(Vec<u64>),
    #[error("{order}-gram {ngram:?} has no stored prefix")]
    MissingPrefix { order: usize, ngram: Vec<String> },
    #[error("{order}-gram {ngram:?} listed twice")]
    Duplicate { order: usize, ngram: Vec<String> },
    #[error("{order}-gram {ngram:?} uses a word missing from the unigrams")]
    UnknownWord { order: usize, ngram: Vec<String> },
    #[error("{order}-gram {ngram:?} has {got} words")]
    WrongLength { order: usize, ngram: Vec<String>, got: usize },
    #[error("model has no unigrams")]
    NoUnigrams,
}

/// Largest supported order.
pub const MAX_ORDER: usize = 16;
