use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;

pub type WordId = u32;

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

/// Token to id bijection. `<unk>`, `<s>` and `</s>` are always present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, WordId>,
    unk: WordId,
    bos: WordId,
    eos: WordId,
}

impl Vocab {
    /// Builds a vocabulary keeping the given order. Missing special tokens
    /// are appended.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Self { words: Vec::new(), index: HashMap::new(), unk: 0, bos: 0, eos: 0 };
        for w in words {
            v.insert(w.into());
        }
        v.unk = v.insert(String::from(UNK));
        v.bos = v.insert(String::from(BOS));
        v.eos = v.insert(String::from(EOS));
        v
    }

    /// Specials first, then the remaining words sorted by byte order.
    pub fn sorted<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut rest: Vec<String> =
            words.into_iter().map(Into::into).filter(|w| w != UNK && w != BOS && w != EOS).collect();
        rest.sort_unstable();
        rest.dedup();
        let specials = [UNK, BOS, EOS].into_iter().map(String::from);
        Self::from_words(specials.chain(rest))
    }

    fn insert(&mut self, w: String) -> WordId {
        if let Some(&id) = self.index.get(&w) {
            return id;
        }
        let id = self.words.len() as WordId;
        self.index.insert(w.clone(), id);
        self.words.push(w);
        id
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    /// Id of `word`, or the unknown-word id.
    pub fn id_or_unk(&self, word: &str) -> WordId {
        self.get(word).unwrap_or(self.unk)
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn unk(&self) -> WordId {
        self.unk
    }

    pub fn bos(&self) -> WordId {
        self.bos
    }

    pub fn eos(&self) -> WordId {
        self.eos
    }
}
