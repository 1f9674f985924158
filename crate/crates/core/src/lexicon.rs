//! Word spellings and the prefix trie used by the decoder.
//!
//! Each word has one spelling, a sequence of character tokens. Characters
//! are Unicode scalar values, matching character-level CTC vocabularies.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use hashbrown::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexiconError {
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("word {0:?} has an empty spelling")]
    EmptySpelling(String),
    #[error("word {0:?} listed twice")]
    DuplicateWord(String),
}

pub type NodeId = u32;
pub type SymbolId = u32;
pub const ROOT: NodeId = 0;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Node {
    /// Sorted by symbol.
    children: Vec<(SymbolId, NodeId)>,
    /// Indices of words spelled by the path to this node.
    words: Vec<u32>,
}

/// A word dropped by [`Lexicon::build`] and the first character that
/// caused it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dropped {
    pub word: String,
    pub character: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    words: Vec<String>,
    spellings: Vec<Vec<SymbolId>>,
    index: HashMap<String, u32>,
    symbols: Vec<String>,
    symbol_index: HashMap<String, SymbolId>,
    nodes: Vec<Node>,
}

/// Splits a word into character tokens.
pub fn spell(word: &str) -> Vec<String> {
    word.chars().map(|c| c.to_string()).collect()
}

impl Lexicon {
    /// Spells every word by its characters and keeps the words whose
    /// characters all belong to `char_vocab`. Repeated words are kept once.
    pub fn build<I, S>(words: I, char_vocab: &BTreeSet<String>) -> Result<(Self, Vec<Dropped>), LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut kept = Vec::new();
        let mut seen = BTreeSet::new();
        let mut dropped = Vec::new();
        for w in words {
            let w = w.as_ref();
            if w.is_empty() || !seen.insert(String::from(w)) {
                continue;
            }
            let spelling = spell(w);
            match spelling.iter().find(|c| !char_vocab.contains(*c)) {
                Some(c) => dropped.push(Dropped { word: String::from(w), character: c.clone() }),
                None => kept.push((String::from(w), spelling)),
            }
        }
        Ok((Self::from_entries(kept)?, dropped))
    }

    /// Builds from explicit `(word, spelling)` pairs, e.g. read from a file.
    pub fn from_entries(entries: Vec<(String, Vec<String>)>) -> Result<Self, LexiconError> {
        if entries.is_empty() {
            return Err(LexiconError::EmptyLexicon);
        }
        let symbols: BTreeSet<&String> = entries.iter().flat_map(|(_, s)| s.iter()).collect();
        let symbols: Vec<String> = symbols.into_iter().cloned().collect();
        let symbol_index: HashMap<String, SymbolId> =
            symbols.iter().enumerate().map(|(i, s)| (s.clone(), i as SymbolId)).collect();
        let mut lex = Self {
            words: Vec::with_capacity(entries.len()),
            spellings: Vec::with_capacity(entries.len()),
            index: HashMap::with_capacity(entries.len()),
            symbols,
            symbol_index,
            nodes: alloc::vec![Node::default()],
        };
        for (word, spelling) in entries {
            if spelling.is_empty() {
                return Err(LexiconError::EmptySpelling(word));
            }
            if lex.index.contains_key(&word) {
                return Err(LexiconError::DuplicateWord(word));
            }
            let ids: Vec<SymbolId> = spelling.iter().map(|s| lex.symbol_index[s]).collect();
            let id = lex.words.len() as u32;
            let mut node = ROOT;
            for &sym in &ids {
                node = lex.child_or_insert(node, sym);
            }
            lex.nodes[node as usize].words.push(id);
            lex.index.insert(word.clone(), id);
            lex.words.push(word);
            lex.spellings.push(ids);
        }
        Ok(lex)
    }

    fn child_or_insert(&mut self, node: NodeId, sym: SymbolId) -> NodeId {
        let next = self.nodes.len() as NodeId;
        let children = &mut self.nodes[node as usize].children;
        match children.binary_search_by_key(&sym, |&(s, _)| s) {
            Ok(i) => children[i].1,
            Err(i) => {
                children.insert(i, (sym, next));
                self.nodes.push(Node::default());
                next
            }
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Distinct character tokens, sorted.
    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, id: SymbolId) -> &str {
        &self.symbols[id as usize]
    }

    pub fn spelling(&self, id: u32) -> impl Iterator<Item = &str> {
        self.spellings[id as usize].iter().map(|&s| self.symbol(s))
    }

    /// `(word, spelling)` pairs in insertion order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, Vec<&str>)> {
        (0..self.words.len() as u32).map(|i| (self.word(i), self.spelling(i).collect()))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn children(&self, node: NodeId) -> &[(SymbolId, NodeId)] {
        &self.nodes[node as usize].children
    }

    pub fn child(&self, node: NodeId, sym: SymbolId) -> Option<NodeId> {
        let children = self.children(node);
        children.binary_search_by_key(&sym, |&(s, _)| s).ok().map(|i| children[i].1)
    }

    /// Words ending at `node`.
    pub fn words_at(&self, node: NodeId) -> &[u32] {
        &self.nodes[node as usize].words
    }

    /// Walks the trie along a token sequence. `None` if the path leaves
    /// the trie.
    pub fn walk<S: AsRef<str>>(&self, tokens: &[S]) -> Option<NodeId> {
        let mut node = ROOT;
        for t in tokens {
            let sym = *self.symbol_index.get(t.as_ref())?;
            node = self.child(node, sym)?;
        }
        Some(node)
    }

    /// Words spelled exactly by `tokens`.
    pub fn lookup<S: AsRef<str>>(&self, tokens: &[S]) -> &[u32] {
        self.walk(tokens).map_or(&[], |n| self.words_at(n))
    }

    /// Every `(word, spelling)` reachable in the trie, by depth-first
    /// traversal.
    pub fn reconstruct(&self) -> BTreeSet<(String, Vec<String>)> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<(NodeId, Vec<String>)> = alloc::vec![(ROOT, Vec::new())];
        while let Some((node, path)) = stack.pop() {
            for &w in self.words_at(node) {
                out.insert((String::from(self.word(w)), path.clone()));
            }
            for &(sym, child) in self.children(node) {
                let mut p = path.clone();
                p.push(String::from(self.symbol(sym)));
                stack.push((child, p));
            }
        }
        out
    }

    /// Adds the `top_k` most frequent corpus words. Words already present
    /// keep their spelling; new words are spelled by characters.
    pub fn augment<I, S>(&self, corpus: I, top_k: usize) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut entries: Vec<(String, Vec<String>)> =
            self.entries().map(|(w, s)| (String::from(w), s.into_iter().map(String::from).collect())).collect();
        for w in top_words(corpus, top_k) {
            if !self.contains(&w) {
                let s = spell(&w);
                entries.push((w, s));
            }
        }
        Self::from_entries(entries).expect("augmenting a valid lexicon")
    }

    /// Fraction of reference tokens not in the lexicon. Zero for an empty
    /// reference.
    pub fn oov_rate<I, S>(&self, reference: I) -> f64
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut total = 0usize;
        let mut oov = 0usize;
        for t in reference {
            total += 1;
            if !self.contains(t.as_ref()) {
                oov += 1;
            }
        }
        if total == 0 {
            0.0
        } else {
            oov as f64 / total as f64
        }
    }
}

/// The `k` most frequent tokens, by decreasing count and then
/// lexicographically.
pub fn top_words<I, S>(tokens: I, k: usize) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if k == 0 {
        return Vec::new();
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for t in tokens {
        let t = t.as_ref();
        if t.is_empty() {
            continue;
        }
        match counts.get_mut(t) {
            Some(c) => *c += 1,
            None => {
                counts.insert(String::from(t), 1);
            }
        }
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked.into_iter().map(|(w, _)| w).collect()
}
