//! Lexicon-constrained CTC beam search with n-gram fusion.
//!
//! A hypothesis is scored as `am + alpha * lm + beta * |words|` where `am`
//! is the CTC log-likelihood of the spelled word sequence and `lm` the
//! natural-log language model probability including `</s>`. The LM is
//! queried once per distinct word history, at the frame where the word's
//! last character is followed by the first character of the next word, or
//! at the end of the utterance.
//!
//! Search states are keyed by (word history, trie node, last emitted
//! class). Paths reaching the same state merge by log-sum-exp of their
//! acoustic scores. Two states with different histories are never merged,
//! even when their LM contexts agree, so every surviving word sequence
//! keeps its exact acoustic score.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::HashMap;
use thiserror::Error;

use crate::ctc::Emissions;
use crate::lexicon::{Lexicon, NodeId, ROOT};
use crate::math::{self, LOG10_TO_LN};
use crate::ngram::{LmState, NGramModel, WordId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("no hypothesis survived the search")]
    EmptyBeam,
    #[error("lexicon character {0:?} is not in the emission vocabulary")]
    VocabMismatch(String),
    #[error("lexicon character {0:?} is a blank class")]
    BlankInLexicon(String),
    #[error("boundary token {0:?} is not in the emission vocabulary")]
    UnknownBoundary(String),
    #[error("invalid decoder config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeConfig {
    pub alpha: f64,
    pub beta: f64,
    pub beam_size: usize,
    pub n_best: usize,
    /// Extra emission tokens treated like blank, e.g. a silence symbol.
    pub boundary_tokens: Vec<String>,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self { alpha: 0.0, beta: 0.0, beam_size: 1024, n_best: 64, boundary_tokens: Vec::new() }
    }
}

impl DecodeConfig {
    pub fn new(alpha: f64, beta: f64, beam_size: usize, n_best: usize) -> Self {
        Self { alpha, beta, beam_size, n_best, boundary_tokens: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.beam_size == 0 {
            return Err(DecodeError::InvalidConfig("beam size must be at least 1"));
        }
        if self.n_best == 0 || self.n_best > self.beam_size {
            return Err(DecodeError::InvalidConfig("n-best must be between 1 and the beam size"));
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(DecodeError::InvalidConfig("alpha and beta must be finite"));
        }
        Ok(())
    }
}

/// Word-level language model as seen by the decoder. Scores are natural
/// logs.
pub trait WordLm {
    type State: Clone;
    type Word: Copy;

    fn resolve(&self, word: &str) -> Self::Word;
    fn begin(&self) -> Self::State;
    fn score(&self, state: &Self::State, word: Self::Word) -> (f64, Self::State);
    fn end(&self, state: &Self::State) -> f64;
}

impl WordLm for NGramModel {
    type State = LmState;
    type Word = WordId;

    fn resolve(&self, word: &str) -> WordId {
        self.vocab().id_or_unk(word)
    }

    fn begin(&self) -> LmState {
        self.begin_state()
    }

    fn score(&self, state: &LmState, word: WordId) -> (f64, LmState) {
        let (s, next) = self.score_word(state, word);
        (s * LOG10_TO_LN, next)
    }

    fn end(&self, state: &LmState) -> f64 {
        self.end_score(state) * LOG10_TO_LN
    }
}

/// A language model that scores every sequence 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoLm;

impl WordLm for NoLm {
    type State = ();
    type Word = ();

    fn resolve(&self, _: &str) {}
    fn begin(&self) {}
    fn score(&self, _: &(), _: ()) -> (f64, ()) {
        (0.0, ())
    }
    fn end(&self, _: &()) -> f64 {
        0.0
    }
}

/// `am + alpha * lm + beta * word_count`.
#[inline]
pub fn score_hypothesis(am_score: f64, lm_score: f64, word_count: usize, alpha: f64, beta: f64) -> f64 {
    am_score + alpha * lm_score + beta * word_count as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis<S> {
    pub words: Vec<String>,
    pub am_score: f64,
    /// Natural-log LM probability, including the end-of-sentence term.
    pub lm_score: f64,
    /// Node where the last word ended, or the root for an empty sequence.
    pub trie_node: NodeId,
    pub lm_state: S,
    /// Class of the last character, `None` for an empty sequence.
    pub last_class: Option<usize>,
    pub combined: f64,
}

impl<S> Hypothesis<S> {
    pub fn score(&self, alpha: f64, beta: f64) -> f64 {
        score_hypothesis(self.am_score, self.lm_score, self.words.len(), alpha, beta)
    }

    pub fn text(&self) -> String {
        self.words.join(" ")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecodeStats {
    pub frames: usize,
    /// Distinct word histories created; each costs one LM word query.
    pub histories: usize,
    pub lm_word_queries: usize,
    pub peak_states: usize,
}

#[derive(Debug, Clone)]
pub struct DecodeOutput<S> {
    pub hypotheses: Vec<Hypothesis<S>>,
    pub stats: DecodeStats,
}

const BLANK: u32 = u32::MAX;

struct History<S> {
    parent: u32,
    word: u32,
    len: usize,
    lm: f64,
    state: S,
    end: Option<f64>,
}

#[derive(Clone, Copy)]
struct State {
    hist: u32,
    node: NodeId,
    last: u32,
    am: f64,
    score: f64,
}

struct Search<'a, L: WordLm> {
    lm: &'a L,
    lm_words: Vec<L::Word>,
    histories: Vec<History<L::State>>,
    index: HashMap<(u32, u32), u32>,
    queries: usize,
}

impl<L: WordLm> Search<'_, L> {
    fn extend(&mut self, hist: u32, word: u32) -> u32 {
        if let Some(&h) = self.index.get(&(hist, word)) {
            return h;
        }
        let parent = &self.histories[hist as usize];
        let (s, state) = self.lm.score(&parent.state, self.lm_words[word as usize]);
        self.queries += 1;
        let h = History { parent: hist, word, len: parent.len + 1, lm: parent.lm + s, state, end: None };
        let id = self.histories.len() as u32;
        self.histories.push(h);
        self.index.insert((hist, word), id);
        id
    }

    fn end_score(&mut self, hist: u32) -> f64 {
        let h = &mut self.histories[hist as usize];
        if let Some(v) = h.end {
            return v;
        }
        let v = self.lm.end(&h.state);
        h.end = Some(v);
        v
    }

    fn words(&self, lex: &Lexicon, mut hist: u32) -> Vec<String> {
        let mut out = Vec::with_capacity(self.histories[hist as usize].len);
        while hist != 0 {
            let h = &self.histories[hist as usize];
            out.push(String::from(lex.word(h.word)));
            hist = h.parent;
        }
        out.reverse();
        out
    }
}

struct Frontier {
    states: Vec<State>,
    index: HashMap<(u32, NodeId, u32), usize>,
}

impl Frontier {
    fn with_capacity(n: usize) -> Self {
        Self { states: Vec::with_capacity(n), index: HashMap::with_capacity(n) }
    }

    fn push(&mut self, hist: u32, node: NodeId, last: u32, am: f64) {
        match self.index.get(&(hist, node, last)) {
            Some(&i) => {
                let s = &mut self.states[i];
                s.am = math::log_add(s.am, am);
            }
            None => {
                self.index.insert((hist, node, last), self.states.len());
                self.states.push(State { hist, node, last, am, score: 0.0 });
            }
        }
    }
}

fn by_score(a: &State, b: &State) -> Ordering {
    b.score.total_cmp(&a.score).then(a.hist.cmp(&b.hist)).then(a.node.cmp(&b.node)).then(a.last.cmp(&b.last))
}

/// Fewest characters still needed from each node to end a word; zero at
/// word ends and at the root.
fn frames_to_word(lex: &Lexicon) -> Vec<usize> {
    let mut dist = alloc::vec![usize::MAX; lex.node_count()];
    // children always have larger ids than their parent
    for node in (0..lex.node_count() as NodeId).rev() {
        let d = if node == ROOT || !lex.words_at(node).is_empty() {
            0
        } else {
            lex.children(node).iter().map(|&(_, c)| dist[c as usize].saturating_add(1)).min().unwrap_or(usize::MAX)
        };
        dist[node as usize] = d;
    }
    dist
}

/// Decodes one utterance and returns up to `cfg.n_best` distinct word
/// sequences, best first. Ties are broken by word sequence order.
pub fn decode<L: WordLm>(
    e: &Emissions,
    lex: &Lexicon,
    lm: &L,
    cfg: &DecodeConfig,
) -> Result<DecodeOutput<L::State>, DecodeError> {
    cfg.validate()?;
    let mut blank_like: Vec<usize> = alloc::vec![e.blank()];
    for tok in &cfg.boundary_tokens {
        let c = e.class_of(tok).ok_or_else(|| DecodeError::UnknownBoundary(tok.clone()))?;
        if !blank_like.contains(&c) {
            blank_like.push(c);
        }
    }
    let mut sym_class: Vec<u32> = Vec::with_capacity(lex.symbols().len());
    for s in lex.symbols() {
        let c = e.class_of(s).ok_or_else(|| DecodeError::VocabMismatch(s.clone()))?;
        if blank_like.contains(&c) {
            return Err(DecodeError::BlankInLexicon(s.clone()));
        }
        sym_class.push(c as u32);
    }

    let mut search = Search {
        lm,
        lm_words: lex.words().iter().map(|w| lm.resolve(w)).collect(),
        histories: alloc::vec![History { parent: 0, word: 0, len: 0, lm: 0.0, state: lm.begin(), end: None }],
        index: HashMap::new(),
        queries: 0,
    };
    let mut stats = DecodeStats { frames: e.frames(), ..DecodeStats::default() };
    let root_children = lex.children(ROOT);
    let to_word = frames_to_word(lex);

    let mut beam = alloc::vec![State { hist: 0, node: ROOT, last: BLANK, am: 0.0, score: 0.0 }];
    for t in 0..e.frames() {
        let row = e.row(t);
        let mut next = Frontier::with_capacity(beam.len() * 4);
        for s in &beam {
            for &k in &blank_like {
                next.push(s.hist, s.node, BLANK, s.am + row[k]);
            }
            if s.last != BLANK {
                next.push(s.hist, s.node, s.last, s.am + row[s.last as usize]);
            }
            for &(sym, child) in lex.children(s.node) {
                let c = sym_class[sym as usize];
                if c != s.last {
                    next.push(s.hist, child, c, s.am + row[c as usize]);
                }
            }
            for &w in lex.words_at(s.node) {
                let h = search.extend(s.hist, w);
                for &(sym, child) in root_children {
                    let c = sym_class[sym as usize];
                    if c != s.last {
                        next.push(h, child, c, s.am + row[c as usize]);
                    }
                }
            }
        }
        // States that cannot finish a word in the remaining frames are dead.
        let remaining = e.frames() - t - 1;
        next.states.retain(|s| to_word[s.node as usize] <= remaining);
        for s in &mut next.states {
            let h = &search.histories[s.hist as usize];
            s.score = score_hypothesis(s.am, h.lm, h.len, cfg.alpha, cfg.beta);
        }
        beam = next.states;
        stats.peak_states = stats.peak_states.max(beam.len());
        beam.sort_unstable_by(by_score);
        beam.truncate(cfg.beam_size);
    }

    // Complete the pending word of every state and merge equal sequences.
    let mut finals: Vec<(u32, f64, NodeId, u32)> = Vec::new();
    let mut final_index: HashMap<u32, usize> = HashMap::new();
    for s in &beam {
        let mut add = |hist: u32| match final_index.get(&hist) {
            Some(&i) => finals[i].1 = math::log_add(finals[i].1, s.am),
            None => {
                final_index.insert(hist, finals.len());
                finals.push((hist, s.am, s.node, s.last));
            }
        };
        if s.node == ROOT {
            add(s.hist);
        }
        for &w in lex.words_at(s.node) {
            let h = search.extend(s.hist, w);
            add(h);
        }
    }
    if finals.is_empty() {
        return Err(DecodeError::EmptyBeam);
    }

    let mut hyps: Vec<Hypothesis<L::State>> = Vec::with_capacity(finals.len());
    for (hist, am, node, _) in finals {
        let end = search.end_score(hist);
        let h = &search.histories[hist as usize];
        let lm_score = h.lm + end;
        let words = search.words(lex, hist);
        let last_class = words.last().map(|_| {
            let w = h.word;
            let last_sym = lex.spelling(w).last().expect("non-empty spelling");
            e.class_of(last_sym).expect("checked above")
        });
        let combined = score_hypothesis(am, lm_score, words.len(), cfg.alpha, cfg.beta);
        hyps.push(Hypothesis {
            words,
            am_score: am,
            lm_score,
            trie_node: node,
            lm_state: h.state.clone(),
            last_class,
            combined,
        });
    }
    hyps.sort_by(|a, b| b.combined.total_cmp(&a.combined).then_with(|| a.words.cmp(&b.words)));
    hyps.truncate(cfg.n_best);
    stats.histories = search.histories.len() - 1;
    stats.lm_word_queries = search.queries;
    Ok(DecodeOutput { hypotheses: hyps, stats })
}
