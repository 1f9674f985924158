//! Word and character error rates.
//!
//! Counts come from a minimal Levenshtein edit script. When several minimal
//! scripts exist the backtrace prefers match/substitution, then deletion,
//! then insertion, so the split between S, I and D is deterministic.
//! Tokens are compared after NFC normalization.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign};

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("empty reference with a non-empty hypothesis")]
    EmptyReference,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCounts {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub reference_tokens: usize,
}

impl ErrorCounts {
    pub fn edits(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    /// `(S + I + D) / N`. An empty reference is only valid with no edits.
    pub fn rate(&self) -> Result<f64, MetricsError> {
        if self.reference_tokens == 0 {
            if self.edits() == 0 {
                Ok(0.0)
            } else {
                Err(MetricsError::EmptyReference)
            }
        } else {
            Ok(self.edits() as f64 / self.reference_tokens as f64)
        }
    }
}

impl Add for ErrorCounts {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for ErrorCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.substitutions += rhs.substitutions;
        self.insertions += rhs.insertions;
        self.deletions += rhs.deletions;
        self.reference_tokens += rhs.reference_tokens;
    }
}

impl core::iter::Sum for ErrorCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// Minimal edit counts turning `reference` into `hypothesis`.
pub fn align_counts<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> ErrorCounts {
    let n = reference.len();
    let m = hypothesis.len();
    let w = m + 1;
    let mut d = vec![0usize; (n + 1) * w];
    for i in 0..=n {
        d[i * w] = i;
    }
    for (j, x) in d.iter_mut().take(m + 1).enumerate() {
        *x = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[(i - 1) * w + j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            let del = d[(i - 1) * w + j] + 1;
            let ins = d[i * w + j - 1] + 1;
            d[i * w + j] = sub.min(del).min(ins);
        }
    }
    let mut counts = ErrorCounts { reference_tokens: n, ..ErrorCounts::default() };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let same = reference[i - 1] == hypothesis[j - 1];
            if d[(i - 1) * w + j - 1] + usize::from(!same) == here {
                if !same {
                    counts.substitutions += 1;
                }
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[(i - 1) * w + j] + 1 == here {
            counts.deletions += 1;
            i -= 1;
        } else {
            counts.insertions += 1;
            j -= 1;
        }
    }
    counts
}

/// Plain Levenshtein distance.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    align_counts(a, b).edits()
}

fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// Word error rate over pre-split tokens.
pub fn wer<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> Result<(f64, ErrorCounts), MetricsError> {
    let r: Vec<String> = reference.iter().map(|t| nfc(t.as_ref())).collect();
    let h: Vec<String> = hypothesis.iter().map(|t| nfc(t.as_ref())).collect();
    let counts = align_counts(&r, &h);
    Ok((counts.rate()?, counts))
}

/// Word error counts for whitespace-separated text.
pub fn word_counts(reference: &str, hypothesis: &str) -> ErrorCounts {
    let r: Vec<String> = reference.split_whitespace().map(nfc).collect();
    let h: Vec<String> = hypothesis.split_whitespace().map(nfc).collect();
    align_counts(&r, &h)
}

/// Character tokens of a transcript: NFC codepoints, with whitespace runs
/// collapsed to a single space and trimmed at both ends.
pub fn char_tokens(text: &str) -> Vec<char> {
    let mut out = Vec::new();
    for (k, word) in text.split_whitespace().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        out.extend(word.nfc());
    }
    out
}

/// Character error counts; whitespace counts as a character.
pub fn char_counts(reference: &str, hypothesis: &str) -> ErrorCounts {
    align_counts(&char_tokens(reference), &char_tokens(hypothesis))
}

/// Character error rate.
pub fn cer(reference: &str, hypothesis: &str) -> Result<f64, MetricsError> {
    char_counts(reference, hypothesis).rate()
}

/// Corpus-level rate: counts are pooled over all pairs before dividing.
pub fn corpus_wer<'a, I>(pairs: I) -> Result<(f64, ErrorCounts), MetricsError>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let total: ErrorCounts = pairs.into_iter().map(|(r, h)| word_counts(r, h)).sum();
    Ok((total.rate()?, total))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_zero() {
        let (rate, c) = wer(&["a", "b"], &["a", "b"]).unwrap();
        assert_eq!(rate, 0.0);
        assert_eq!(c.edits(), 0);
    }

    #[test]
    fn single_substitution() {
        let (rate, c) = wer(&["a", "b", "c"], &["a", "x", "c"]).unwrap();
        assert!((rate - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.substitutions, 1);
        assert_eq!(c.insertions + c.deletions, 0);
    }

    #[test]
    fn insertions_and_deletions() {
        let c = word_counts("a b c", "a c");
        assert_eq!((c.substitutions, c.insertions, c.deletions), (0, 0, 1));
        let c = word_counts("a c", "a b c");
        assert_eq!((c.substitutions, c.insertions, c.deletions), (0, 1, 0));
    }

    #[test]
    fn empty_reference_conventions() {
        let empty: [&str; 0] = [];
        assert_eq!(wer(&empty, &empty).unwrap().0, 0.0);
        assert_eq!(wer(&empty, &["a"]), Err(MetricsError::EmptyReference));
    }

    #[test]
    fn nfc_equivalent_tokens_match() {
        // "क़" precomposed vs. क + nukta
        let (rate, _) = wer(&["\u{0958}"], &["\u{0915}\u{093C}"]).unwrap();
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn cer_counts_spaces() {
        assert_eq!(cer("ab cd", "ab cd").unwrap(), 0.0);
        // "abcd" vs "ab cd": one deleted space out of 5 characters
        assert!((cer("ab cd", "abcd").unwrap() - 0.2).abs() < 1e-15);
        assert!((cer("ab", "xb").unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn corpus_pools_counts() {
        let (rate, c) = corpus_wer([("a b c d", "a b c d"), ("e", "f")]).unwrap();
        assert_eq!(c.reference_tokens, 5);
        assert!((rate - 0.2).abs() < 1e-15);
    }
}
