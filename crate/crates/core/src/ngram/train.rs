//! Interpolated modified Kneser-Ney estimation.
//!
//! Sentences are padded as `<s> w1 .. wk </s>`. The highest order keeps raw
//! counts; lower orders use adjusted counts, i.e. the number of distinct
//! words seen to the left, except n-grams starting with `<s>`, which keep
//! raw counts. Each order gets three discounts (for adjusted counts 1, 2
//! and 3+) estimated from counts-of-counts.
//!
//! Pruning drops n-grams whose adjusted count is at or below the order's
//! threshold, plus any n-gram whose prefix or suffix was dropped. Stored
//! probabilities keep their unpruned interpolated values; the probability
//! of pruned n-grams moves into the context's backoff weight.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};

use super::model::{Entry, NGramModel, LOG10_IMPOSSIBLE};
use super::vocab::{Vocab, WordId, BOS, EOS};
use super::{NGramError, MAX_ORDER};
use crate::math;

/// Discount used when counts-of-counts cannot support estimation.
pub const FALLBACK_DISCOUNT: f64 = 0.75;

/// Per-order minimum adjusted counts. The last value repeats for any
/// higher order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneConfig {
    thresholds: Vec<u64>,
}

impl Default for PruneConfig {
    /// Singletons pruned at order 5, doubletons at order 6 and above.
    fn default() -> Self {
        Self { thresholds: vec![0, 0, 0, 0, 1, 2] }
    }
}

impl PruneConfig {
    pub fn none() -> Self {
        Self { thresholds: Vec::new() }
    }

    /// Thresholds must be non-decreasing and unigrams cannot be pruned.
    pub fn new(thresholds: Vec<u64>) -> Result<Self, NGramError> {
        let sorted = thresholds.windows(2).all(|w| w[0] <= w[1]);
        if !sorted || thresholds.first().is_some_and(|&t| t > 0) {
            return Err(NGramError::InvalidPrune(thresholds));
        }
        Ok(Self { thresholds })
    }

    /// Threshold for order `n` (1-based).
    pub fn threshold(&self, n: usize) -> u64 {
        match self.thresholds.get(n - 1) {
            Some(&t) => t,
            None => self.thresholds.last().copied().unwrap_or(0),
        }
    }

    pub fn thresholds(&self) -> &[u64] {
        &self.thresholds
    }
}

/// N-gram counts of orders `1..=order` over padded sentences.
///
/// Shards can be counted independently and combined with
/// [`NGramCounts::merge`]; the trained model does not depend on how the
/// corpus was split.
#[derive(Debug, Clone)]
pub struct NGramCounts {
    order: usize,
    words: Vec<String>,
    index: HashMap<String, WordId>,
    counts: Vec<HashMap<Vec<WordId>, u64>>,
    sentences: u64,
}

const LOCAL_BOS: WordId = 0;
const LOCAL_EOS: WordId = 1;

impl NGramCounts {
    pub fn new(order: usize) -> Result<Self, NGramError> {
        if order == 0 || order > MAX_ORDER {
            return Err(NGramError::InvalidOrder { got: order, max: MAX_ORDER });
        }
        let mut c = Self {
            order,
            words: Vec::new(),
            index: HashMap::new(),
            counts: (0..order).map(|_| HashMap::new()).collect(),
            sentences: 0,
        };
        c.intern(BOS);
        c.intern(EOS);
        Ok(c)
    }

    fn intern(&mut self, w: &str) -> WordId {
        if let Some(&id) = self.index.get(w) {
            return id;
        }
        let id = self.words.len() as WordId;
        self.words.push(String::from(w));
        self.index.insert(String::from(w), id);
        id
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn sentences(&self) -> u64 {
        self.sentences
    }

    /// Counts one sentence. Empty sentences and literal `<s>`/`</s>`
    /// tokens are ignored.
    pub fn add_sentence<S: AsRef<str>>(&mut self, tokens: &[S]) {
        let mut padded = Vec::with_capacity(tokens.len() + 2);
        padded.push(LOCAL_BOS);
        for t in tokens {
            let t = t.as_ref();
            if t == BOS || t == EOS || t.is_empty() {
                continue;
            }
            let id = self.intern(t);
            padded.push(id);
        }
        if padded.len() == 1 {
            return;
        }
        padded.push(LOCAL_EOS);
        self.sentences += 1;
        for n in 1..=self.order.min(padded.len()) {
            let table = &mut self.counts[n - 1];
            for gram in padded.windows(n) {
                *table.entry_ref(gram).or_insert(0) += 1;
            }
        }
    }

    /// Whitespace-tokenizes and counts one line.
    pub fn add_line(&mut self, line: &str) {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        self.add_sentence(&tokens);
    }

    /// Adds another shard's counts into this one.
    pub fn merge(&mut self, other: NGramCounts) {
        let remap: Vec<WordId> = other.words.iter().map(|w| self.intern(w)).collect();
        for (n, table) in other.counts.into_iter().enumerate().take(self.order) {
            let mine = &mut self.counts[n];
            for (gram, c) in table {
                let key: Vec<WordId> = gram.iter().map(|&w| remap[w as usize]).collect();
                *mine.entry(key).or_insert(0) += c;
            }
        }
        self.sentences += other.sentences;
    }

    /// Raw count of an n-gram given as tokens.
    pub fn raw_count(&self, ngram: &[&str]) -> u64 {
        if ngram.is_empty() || ngram.len() > self.order {
            return 0;
        }
        let ids: Option<Vec<WordId>> = ngram.iter().map(|w| self.index.get(*w).copied()).collect();
        ids.and_then(|k| self.counts[ngram.len() - 1].get(&k).copied()).unwrap_or(0)
    }

    /// Every counted n-gram of order `n` with its raw count.
    pub fn raw_ngrams(&self, n: usize) -> Vec<(Vec<&str>, u64)> {
        self.counts[n - 1]
            .iter()
            .map(|(k, &c)| (k.iter().map(|&w| self.words[w as usize].as_str()).collect(), c))
            .collect()
    }
}

/// Discounts for adjusted counts 1, 2 and 3+.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discounts {
    pub d1: f64,
    pub d2: f64,
    pub d3_plus: f64,
}

impl Discounts {
    pub const FALLBACK: Discounts =
        Discounts { d1: FALLBACK_DISCOUNT, d2: FALLBACK_DISCOUNT, d3_plus: FALLBACK_DISCOUNT };

    /// Estimates from counts-of-counts `t[k-1]` = number of n-grams with
    /// adjusted count `k`, `k = 1..=4`. `None` when the estimate is
    /// undefined or out of range.
    pub fn estimate(t: [u64; 4]) -> Option<Self> {
        if t.contains(&0) {
            return None;
        }
        let [t1, t2, t3, t4] = t.map(|x| x as f64);
        let y = t1 / (t1 + 2.0 * t2);
        let d =
            Discounts { d1: 1.0 - 2.0 * y * t2 / t1, d2: 2.0 - 3.0 * y * t3 / t2, d3_plus: 3.0 - 4.0 * y * t4 / t3 };
        let ok = d.d1 > 0.0 && d.d1 < 1.0 && d.d2 > 0.0 && d.d2 < 2.0 && d.d3_plus > 0.0 && d.d3_plus < 3.0;
        ok.then_some(d)
    }

    pub fn for_count(&self, count: u64) -> f64 {
        match count {
            0 => 0.0,
            1 => self.d1,
            2 => self.d2,
            _ => self.d3_plus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub discounts: Vec<Discounts>,
    /// Orders (1-based) that fell back to [`FALLBACK_DISCOUNT`].
    pub fallback_orders: Vec<usize>,
    pub counted: Vec<usize>,
    pub stored: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: NGramModel,
    pub report: TrainReport,
}

#[derive(Default, Clone, Copy)]
struct ContextStats {
    total: u64,
    n: [u64; 3],
}

impl ContextStats {
    fn add(&mut self, count: u64) {
        self.total += count;
        match count {
            1 => self.n[0] += 1,
            2 => self.n[1] += 1,
            _ => self.n[2] += 1,
        }
    }

    fn gamma(&self, d: &Discounts) -> f64 {
        (d.d1 * self.n[0] as f64 + d.d2 * self.n[1] as f64 + d.d3_plus * self.n[2] as f64) / self.total as f64
    }
}

/// Estimates a model from counts.
pub fn train(counts: &NGramCounts, prune: &PruneConfig) -> Result<Trained, NGramError> {
    if counts.sentences == 0 {
        return Err(NGramError::EmptyCorpus);
    }
    let order = counts.order;

    let vocab = Vocab::sorted(counts.words.iter().cloned());
    let remap: Vec<WordId> = counts.words.iter().map(|w| vocab.get(w).expect("word in vocab")).collect();
    let bos = vocab.bos();
    let raw: Vec<HashMap<Vec<WordId>, u64>> = counts
        .counts
        .iter()
        .map(|t| t.iter().map(|(k, &c)| (k.iter().map(|&w| remap[w as usize]).collect(), c)).collect())
        .collect();

    // Adjusted counts.
    let mut adjusted: Vec<HashMap<Vec<WordId>, u64>> = Vec::with_capacity(order);
    for n in 1..=order {
        let mut adj: HashMap<Vec<WordId>, u64> = HashMap::with_capacity(raw[n - 1].len());
        if n == order {
            adj.clone_from(&raw[n - 1]);
        } else {
            for gram in raw[n].keys() {
                *adj.entry_ref(&gram[1..]).or_insert(0) += 1;
            }
            for (gram, &c) in &raw[n - 1] {
                if gram[0] == bos {
                    adj.insert(gram.clone(), c);
                }
            }
        }
        if n == 1 {
            adj.remove([bos].as_slice());
        }
        adjusted.push(adj);
    }

    // Discounts.
    let mut discounts = Vec::with_capacity(order);
    let mut fallback_orders = Vec::new();
    for (k, adj) in adjusted.iter().enumerate() {
        let mut t = [0u64; 4];
        for &c in adj.values() {
            if (1..=4).contains(&c) {
                t[c as usize - 1] += 1;
            }
        }
        match Discounts::estimate(t) {
            Some(d) => discounts.push(d),
            None => {
                discounts.push(Discounts::FALLBACK);
                fallback_orders.push(k + 1);
            }
        }
    }

    // Context statistics, keyed by context (order n-1) for each order n.
    let mut stats: Vec<HashMap<Vec<WordId>, ContextStats>> = Vec::with_capacity(order);
    for adj in &adjusted {
        let mut s: HashMap<Vec<WordId>, ContextStats> = HashMap::new();
        for (gram, &c) in adj {
            s.entry_ref(&gram[..gram.len() - 1]).or_default().add(c);
        }
        stats.push(s);
    }

    // Interpolated probabilities of every counted n-gram.
    let predicted = vocab.len() - 1; // everything but <s>
    let uni_stats = stats[0].get([].as_slice()).copied().unwrap_or_default();
    let uni_gamma = uni_stats.gamma(&discounts[0]);
    let uniform = uni_gamma / predicted as f64;
    let mut interp: Vec<HashMap<Vec<WordId>, f64>> = Vec::with_capacity(order);
    {
        let mut p1 = HashMap::with_capacity(vocab.len());
        for w in 0..vocab.len() as WordId {
            if w == bos {
                continue;
            }
            let a = adjusted[0].get([w].as_slice()).copied().unwrap_or(0);
            let direct = (a as f64 - discounts[0].for_count(a)).max(0.0) / uni_stats.total as f64;
            p1.insert(vec![w], direct + uniform);
        }
        interp.push(p1);
    }
    for n in 2..=order {
        let d = &discounts[n - 1];
        let mut pn = HashMap::with_capacity(adjusted[n - 1].len());
        for (gram, &a) in &adjusted[n - 1] {
            let st = stats[n - 1][&gram[..n - 1]];
            let lower = interp[n - 2][&gram[1..]];
            let p = (a as f64 - d.for_count(a)) / st.total as f64 + st.gamma(d) * lower;
            pn.insert(gram.clone(), p);
        }
        interp.push(pn);
    }

    // Pruning.
    let mut kept: Vec<HashSet<Vec<WordId>>> = Vec::with_capacity(order);
    let mut unigrams: HashSet<Vec<WordId>> = interp[0].keys().cloned().collect();
    unigrams.insert(vec![bos]);
    kept.push(unigrams);
    for n in 2..=order {
        let thr = prune.threshold(n);
        let prev = &kept[n - 2];
        let set: HashSet<Vec<WordId>> = adjusted[n - 1]
            .iter()
            .filter(|(g, &a)| a > thr && prev.contains(&g[..n - 1]) && prev.contains(&g[1..]))
            .map(|(g, _)| g.clone())
            .collect();
        kept.push(set);
    }

    // Backoff weights for contexts of order n, from extensions at order n+1.
    let mut backoffs: Vec<HashMap<Vec<WordId>, f64>> = (0..order).map(|_| HashMap::new()).collect();
    for n in 2..=order {
        let d = &discounts[n - 1];
        // per context: (sum of pruned direct mass, sum of kept lower-order probs)
        let mut acc: HashMap<Vec<WordId>, (f64, f64)> = HashMap::new();
        for (gram, &a) in &adjusted[n - 1] {
            let ctx = &gram[..n - 1];
            let slot = acc.entry_ref(ctx).or_insert((0.0, 0.0));
            if kept[n - 1].contains(gram) {
                slot.1 += interp[n - 2][&gram[1..]];
            } else {
                let st = stats[n - 1][ctx];
                slot.0 += (a as f64 - d.for_count(a)) / st.total as f64;
            }
        }
        for (ctx, (pruned_mass, kept_lower)) in acc {
            let gamma = stats[n - 1][&ctx].gamma(d);
            let b = gamma + pruned_mass / (1.0 - kept_lower);
            backoffs[n - 2].insert(ctx, b);
        }
    }

    let mut tables: Vec<Vec<(Vec<WordId>, Entry)>> = Vec::with_capacity(order);
    let mut stored = Vec::with_capacity(order);
    for n in 1..=order {
        let mut entries: Vec<(Vec<WordId>, Entry)> = kept[n - 1]
            .iter()
            .filter(|g| n > 1 || g[0] != bos)
            .map(|g| {
                let log10_prob = math::log10(interp[n - 1][g]);
                let log10_backoff = backoffs[n - 1].get(g).map_or(0.0, |&b| math::log10(b));
                (g.clone(), Entry { log10_prob, log10_backoff })
            })
            .collect();
        if n == 1 {
            let log10_backoff = backoffs[0].get([bos].as_slice()).map_or(0.0, |&b| math::log10(b));
            entries.push((vec![bos], Entry { log10_prob: LOG10_IMPOSSIBLE, log10_backoff }));
        }
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        stored.push(entries.len());
        tables.push(entries);
    }

    let counted = raw.iter().map(HashMap::len).collect();
    let model = NGramModel::from_parts(order, vocab, tables)?;
    Ok(Trained { model, report: TrainReport { discounts, fallback_orders, counted, stored } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(order: usize, lines: &[&str]) -> NGramCounts {
        let mut c = NGramCounts::new(order).unwrap();
        for l in lines {
            c.add_line(l);
        }
        c
    }

    fn p(model: &NGramModel, ctx: &[&str], w: &str) -> f64 {
        let v = model.vocab();
        let ctx: Vec<WordId> = ctx.iter().map(|t| v.id_or_unk(t)).collect();
        math::pow(10.0, model.log10_prob(&ctx, v.id_or_unk(w)))
    }

    #[test]
    fn frequent_successor_dominates() {
        let lines = ["a b"; 100];
        let t = train(&counts(3, &lines), &PruneConfig::none()).unwrap();
        assert!(p(&t.model, &["a"], "b") > p(&t.model, &["a"], "a"));
    }

    #[test]
    fn hand_computed_bigram_values() {
        // <s> a b </s> / <s> a c </s> / <s> b c </s>
        // unigram adjusted counts: a=1 b=2 c=2 </s>=2 (sum 7); t3 = 0 so both
        // orders use the fixed 0.75 discount.
        let t = train(&counts(2, &["a b", "a c", "b c"]), &PruneConfig::none()).unwrap();
        assert_eq!(t.report.fallback_orders, vec![1, 2]);
        let gamma1 = 0.75 * 4.0 / 7.0;
        let uniform = gamma1 / 5.0;
        let pa = 0.25 / 7.0 + uniform;
        let pb = 1.25 / 7.0 + uniform;
        assert!((p(&t.model, &[], "a") - pa).abs() < 1e-12);
        assert!((p(&t.model, &[], "b") - pb).abs() < 1e-12);
        assert!((p(&t.model, &[], "<unk>") - uniform).abs() < 1e-12);
        // context a: b=1, c=1, total 2, gamma = 0.75
        assert!((p(&t.model, &["a"], "b") - (0.25 / 2.0 + 0.75 * pb)).abs() < 1e-12);
        // unseen a -> </s> backs off with gamma(a)
        let pe = 1.25 / 7.0 + uniform;
        assert!((p(&t.model, &["a"], "</s>") - 0.75 * pe).abs() < 1e-12);
        // context <s>: a=2, b=1 (raw counts), total 3; gamma = (0.75 + 0.75) / 3
        let g_bos = 1.5 / 3.0;
        assert!((p(&t.model, &["<s>"], "a") - (1.25 / 3.0 + g_bos * pa)).abs() < 1e-12);
    }

    #[test]
    fn discount_estimate_matches_formula() {
        let d = Discounts::estimate([10, 5, 3, 2]).unwrap();
        let y = 10.0 / 20.0;
        assert!((d.d1 - (1.0 - 2.0 * y * 5.0 / 10.0)).abs() < 1e-15);
        assert!((d.d2 - (2.0 - 3.0 * y * 3.0 / 5.0)).abs() < 1e-15);
        assert!((d.d3_plus - (3.0 - 4.0 * y * 2.0 / 3.0)).abs() < 1e-15);
        assert!(Discounts::estimate([10, 0, 3, 2]).is_none());
    }

    #[test]
    fn empty_corpus_rejected() {
        let c = counts(3, &["", "   "]);
        assert!(matches!(train(&c, &PruneConfig::none()), Err(NGramError::EmptyCorpus)));
    }

    #[test]
    fn prune_config_validation() {
        assert!(PruneConfig::new(vec![0, 0, 1, 0]).is_err());
        assert!(PruneConfig::new(vec![1]).is_err());
        let p = PruneConfig::new(vec![0, 0, 1]).unwrap();
        assert_eq!(p.threshold(2), 0);
        assert_eq!(p.threshold(7), 1);
        assert_eq!(PruneConfig::default().threshold(5), 1);
        assert_eq!(PruneConfig::default().threshold(6), 2);
    }

    #[test]
    fn sharded_counts_train_identically() {
        let lines = ["a b c", "b c d", "a a b", "c d a b", "d d"];
        let whole = counts(3, &lines);
        let mut left = counts(3, &lines[..2]);
        left.merge(counts(3, &lines[2..]));
        let a = train(&whole, &PruneConfig::none()).unwrap().model;
        let b = train(&left, &PruneConfig::none()).unwrap().model;
        for n in 1..=3 {
            assert_eq!(a.entries(n), b.entries(n));
        }
    }
}
