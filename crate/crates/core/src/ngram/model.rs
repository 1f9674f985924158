use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;

use super::vocab::{Vocab, WordId};
use super::{NGramError, MAX_ORDER};
use crate::math;

/// Stored scores of one n-gram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub log10_prob: f64,
    /// Zero for n-grams of the highest order and for n-grams that are never
    /// a context.
    pub log10_backoff: f64,
}

/// Log10 probability used for `<s>` as a unigram and for a missing `<unk>`.
pub const LOG10_IMPOSSIBLE: f64 = -99.0;

/// Context of the next query, reduced to the longest suffix the model stores.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LmState(Vec<WordId>);

impl LmState {
    pub fn words(&self) -> &[WordId] {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    vocab: Vocab,
    tables: Vec<HashMap<Vec<WordId>, Entry>>,
}

impl NGramModel {
    /// Assembles a model from per-order entry lists (`tables[k]` holds the
    /// `(k+1)`-grams) and checks that every n-gram's prefix is stored.
    pub fn from_parts(order: usize, vocab: Vocab, tables: Vec<Vec<(Vec<WordId>, Entry)>>) -> Result<Self, NGramError> {
        if order == 0 || order > MAX_ORDER {
            return Err(NGramError::InvalidOrder { got: order, max: MAX_ORDER });
        }
        let mut maps: Vec<HashMap<Vec<WordId>, Entry>> = (0..order).map(|_| HashMap::new()).collect();
        for (k, table) in tables.into_iter().enumerate().take(order) {
            let n = k + 1;
            for (ngram, entry) in table {
                let words = || ngram.iter().map(|&w| String::from(vocab.word(w))).collect::<Vec<_>>();
                if ngram.len() != n {
                    return Err(NGramError::WrongLength { order: n, ngram: words(), got: ngram.len() });
                }
                if ngram.iter().any(|&w| w as usize >= vocab.len()) {
                    return Err(NGramError::UnknownWord { order: n, ngram: Vec::new() });
                }
                if n > 1 && !maps[n - 2].contains_key(&ngram[..n - 1]) {
                    return Err(NGramError::MissingPrefix { order: n, ngram: words() });
                }
                let dup = maps[k].insert(ngram.clone(), entry).is_some();
                if dup {
                    return Err(NGramError::Duplicate { order: n, ngram: words() });
                }
            }
        }
        if maps[0].is_empty() {
            return Err(NGramError::NoUnigrams);
        }
        maps[0].entry(alloc::vec![vocab.unk()]).or_insert(Entry { log10_prob: LOG10_IMPOSSIBLE, log10_backoff: 0.0 });
        Ok(Self { order, vocab, tables: maps })
    }

    /// Same as [`NGramModel::from_parts`] for string n-grams, e.g. parsed
    /// from a text file. The vocabulary follows the unigram order.
    pub fn from_string_entries(order: usize, tables: Vec<Vec<(Vec<String>, Entry)>>) -> Result<Self, NGramError> {
        let unigrams: Vec<String> =
            tables.first().map(|t| t.iter().filter_map(|(g, _)| g.first().cloned()).collect()).unwrap_or_default();
        let vocab = Vocab::from_words(unigrams);
        let mut id_tables = Vec::with_capacity(tables.len());
        for (k, table) in tables.into_iter().enumerate() {
            let mut ids = Vec::with_capacity(table.len());
            for (ngram, entry) in table {
                let mapped: Option<Vec<WordId>> = ngram.iter().map(|w| vocab.get(w)).collect();
                let Some(mapped) = mapped else {
                    return Err(NGramError::UnknownWord { order: k + 1, ngram });
                };
                ids.push((mapped, entry));
            }
            id_tables.push(ids);
        }
        Self::from_parts(order, vocab, id_tables)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    /// Number of stored n-grams of order `n` (1-based).
    pub fn count(&self, n: usize) -> usize {
        self.tables.get(n.wrapping_sub(1)).map_or(0, HashMap::len)
    }

    pub fn get(&self, ngram: &[WordId]) -> Option<&Entry> {
        if ngram.is_empty() || ngram.len() > self.order {
            return None;
        }
        self.tables[ngram.len() - 1].get(ngram)
    }

    /// Entries of order `n`, sorted by id sequence.
    pub fn entries(&self, n: usize) -> Vec<(&[WordId], &Entry)> {
        let mut out: Vec<(&[WordId], &Entry)> = self.tables[n - 1].iter().map(|(k, v)| (k.as_slice(), v)).collect();
        out.sort_unstable_by(|a, b| a.0.cmp(b.0));
        out
    }

    /// Log10 P(word | context) with ARPA backoff. Only the last `order - 1`
    /// context words are used.
    pub fn log10_prob(&self, context: &[WordId], word: WordId) -> f64 {
        let ctx = &context[context.len().saturating_sub(self.order - 1)..];
        let mut buf = [0 as WordId; MAX_ORDER];
        let mut backoff = 0.0;
        for start in 0..=ctx.len() {
            let tail = &ctx[start..];
            let n = tail.len() + 1;
            buf[..tail.len()].copy_from_slice(tail);
            buf[tail.len()] = word;
            if let Some(e) = self.tables[n - 1].get(&buf[..n]) {
                return backoff + e.log10_prob;
            }
            if !tail.is_empty() {
                if let Some(c) = self.tables[tail.len() - 1].get(tail) {
                    backoff += c.log10_backoff;
                }
            }
        }
        let unk = self.vocab.unk();
        let p = self.tables[0].get([unk].as_slice()).map_or(LOG10_IMPOSSIBLE, |e| e.log10_prob);
        backoff + p
    }

    /// Log10 probability of a whole sentence, including `</s>` and
    /// conditioned on `<s>`. Unknown tokens score as `<unk>`.
    pub fn score_sentence<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        let mut state = self.begin_state();
        let mut total = 0.0;
        for t in tokens {
            let (s, next) = self.score_word(&state, self.vocab.id_or_unk(t.as_ref()));
            total += s;
            state = next;
        }
        total + self.end_score(&state)
    }

    /// Per-token perplexity, counting one `</s>` per sentence.
    pub fn perplexity<'a, I, S>(&self, sentences: I) -> f64
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut total = 0.0;
        let mut tokens = 0usize;
        for s in sentences {
            total += self.score_sentence(s);
            tokens += s.len() + 1;
        }
        if tokens == 0 {
            return 1.0;
        }
        math::pow(10.0, -total / tokens as f64)
    }

    fn reduce(&self, ctx: &[WordId]) -> LmState {
        let mut ctx = &ctx[ctx.len().saturating_sub(self.order - 1)..];
        while !ctx.is_empty() && self.tables[ctx.len() - 1].get(ctx).is_none() {
            ctx = &ctx[1..];
        }
        LmState(ctx.to_vec())
    }

    pub fn begin_state(&self) -> LmState {
        self.reduce(&[self.vocab.bos()])
    }

    /// Scores `word` after `state` and returns the next state.
    pub fn score_word(&self, state: &LmState, word: WordId) -> (f64, LmState) {
        let score = self.log10_prob(&state.0, word);
        let mut next = state.0.clone();
        next.push(word);
        (score, self.reduce(&next))
    }

    /// Log10 P(`</s>` | state).
    pub fn end_score(&self, state: &LmState) -> f64 {
        self.log10_prob(&state.0, self.vocab.eos())
    }

    /// Sum of P(w | context) over every word except `<s>`.
    pub fn context_mass(&self, context: &[WordId]) -> f64 {
        let bos = self.vocab.bos();
        (0..self.vocab.len() as WordId)
            .filter(|&w| w != bos)
            .map(|w| math::pow(10.0, self.log10_prob(context, w)))
            .sum()
    }
}
