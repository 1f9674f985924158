//! Temperature-based sampling of languages for multilingual batches.
//!
//! Languages are drawn with probability `p_l ∝ (n_l / N)^alpha`, where
//! `n_l` is the language's hours and `N` the total. Within a language,
//! utterances are drawn uniformly, with replacement.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{CorpusEntry, CorpusManifest};
use crate::math;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("corpus has no hours")]
    EmptyCorpus,
    #[error("alpha must be in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("language {language} has invalid hours {hours}")]
    InvalidHours { language: String, hours: f64 },
    #[error("language {0} was sampled but has no entries")]
    LanguageExhausted(String),
    #[error("entry {0} has a non-positive duration")]
    ZeroDuration(String),
    #[error("batch hours must be positive and finite, got {0}")]
    InvalidBatchHours(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPolicy {
    pub alpha: f64,
    pub language_hours: BTreeMap<String, f64>,
}

impl SamplingPolicy {
    pub fn new(alpha: f64, language_hours: BTreeMap<String, f64>) -> Self {
        Self { alpha, language_hours }
    }

    pub fn from_manifest(alpha: f64, manifest: &CorpusManifest) -> Self {
        Self::new(alpha, manifest.per_language_hours())
    }

    pub fn total_hours(&self) -> f64 {
        self.language_hours.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanguageDistribution {
    pub probs: BTreeMap<String, f64>,
}

impl LanguageDistribution {
    pub fn prob(&self, language: &str) -> f64 {
        self.probs.get(language).copied().unwrap_or(0.0)
    }
}

/// `p_l = (n_l/N)^alpha / sum_k (n_k/N)^alpha`. With `alpha = 0` every
/// language with hours gets the same probability; languages without hours
/// get 0.
pub fn language_distribution(policy: &SamplingPolicy) -> Result<LanguageDistribution, SamplerError> {
    if !(0.0..=1.0).contains(&policy.alpha) {
        return Err(SamplerError::InvalidAlpha(policy.alpha));
    }
    for (l, &h) in &policy.language_hours {
        if !(h >= 0.0 && h.is_finite()) {
            return Err(SamplerError::InvalidHours { language: l.clone(), hours: h });
        }
    }
    let total = policy.total_hours();
    if total <= 0.0 {
        return Err(SamplerError::EmptyCorpus);
    }
    let weights: Vec<(String, f64)> = policy
        .language_hours
        .iter()
        .map(|(l, &h)| {
            let w = if h > 0.0 { math::pow(h / total, policy.alpha) } else { 0.0 };
            (l.clone(), w)
        })
        .collect();
    let z: f64 = weights.iter().map(|(_, w)| w).sum();
    Ok(LanguageDistribution { probs: weights.into_iter().map(|(l, w)| (l, w / z)).collect() })
}

/// Draws entries until their durations reach `batch_hours`. The result
/// depends only on the inputs and `seed`.
pub fn draw_batch(
    dist: &LanguageDistribution,
    manifest: &CorpusManifest,
    batch_hours: f64,
    seed: u64,
) -> Result<Vec<CorpusEntry>, SamplerError> {
    if !(batch_hours > 0.0 && batch_hours.is_finite()) {
        return Err(SamplerError::InvalidBatchHours(batch_hours));
    }
    let languages: Vec<&String> = dist.probs.keys().collect();
    let weights: Vec<f64> = dist.probs.values().copied().collect();
    let chooser = WeightedIndex::new(&weights).map_err(|_| SamplerError::EmptyCorpus)?;
    let mut by_language: BTreeMap<&str, Vec<&CorpusEntry>> = BTreeMap::new();
    for e in &manifest.entries {
        by_language.entry(e.language.as_str()).or_default().push(e);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target_s = batch_hours * 3600.0;
    let mut total_s = 0.0;
    let mut batch = Vec::new();
    while total_s < target_s {
        let lang = languages[chooser.sample(&mut rng)];
        let pool = by_language
            .get(lang.as_str())
            .filter(|p| !p.is_empty())
            .ok_or_else(|| SamplerError::LanguageExhausted(lang.clone()))?;
        let entry = pool[rng.gen_range(0..pool.len())];
        if !(entry.duration_s > 0.0) {
            return Err(SamplerError::ZeroDuration(entry.clip_path.clone()));
        }
        total_s += entry.duration_s;
        batch.push(entry.clone());
    }
    Ok(batch)
}
