//! Grid search over decoder weights and n-best rescoring with an external
//! language model.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::str::FromStr;

use thiserror::Error;

use crate::ctc::Emissions;
use crate::decoder::{decode, score_hypothesis, DecodeConfig, DecodeError, WordLm};
use crate::lexicon::Lexicon;
use crate::math;
use crate::metrics::{word_counts, ErrorCounts, MetricsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TuneError {
    #[error("no reference for utterance {0}")]
    MissingReference(String),
    #[error("external LM scores missing for {} n-best entries, first {:?}", .0.len(), .0.first())]
    MissingScore(Vec<(String, u32)>),
    #[error("invalid grid range {0}")]
    InvalidRange(String),
    #[error("nothing to evaluate")]
    Empty,
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Inclusive range `lo, lo + step, ..., <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridRange {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self, TuneError> {
        let ok = lo.is_finite() && hi.is_finite() && lo <= hi && step > 0.0 && step.is_finite();
        if !ok {
            return Err(TuneError::InvalidRange(alloc::format!("{lo}:{hi}:{step}")));
        }
        Ok(Self { lo, hi, step })
    }

    pub fn single(v: f64) -> Self {
        Self { lo: v, hi: v, step: 1.0 }
    }

    pub fn points(&self) -> Vec<f64> {
        let n = math::floor((self.hi - self.lo) / self.step + 1e-9) as usize + 1;
        (0..n).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

impl FromStr for GridRange {
    type Err = TuneError;

    /// `lo:hi:step`, or a single value.
    fn from_str(s: &str) -> Result<Self, TuneError> {
        let bad = || TuneError::InvalidRange(String::from(s));
        let parts: Vec<f64> =
            s.split(':').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?;
        match parts[..] {
            [v] => Ok(Self::single(v)),
            [lo, hi, step] => Self::new(lo, hi, step),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub alpha: GridRange,
    pub beta: GridRange,
    pub tune_beam: usize,
    pub test_beam: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            alpha: GridRange { lo: -4.0, hi: 4.0, step: 0.5 },
            beta: GridRange { lo: 0.0, hi: 5.0, step: 0.5 },
            tune_beam: 64,
            test_beam: 1024,
        }
    }
}

impl GridSpec {
    /// `(alpha, beta)` pairs, alpha-major.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let betas = self.beta.points();
        self.alpha.points().into_iter().flat_map(|a| betas.iter().map(move |&b| (a, b))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub alpha: f64,
    pub beta: f64,
    pub counts: ErrorCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub alpha: f64,
    pub beta: f64,
    pub counts: ErrorCounts,
    pub surface: Vec<GridPoint>,
    pub decodes: usize,
}

impl TuneResult {
    pub fn wer(&self) -> f64 {
        self.counts.rate().unwrap_or(0.0)
    }
}

/// Lowest corpus WER; ties go to smaller `|alpha|`, then smaller `beta`.
pub fn select_best(surface: &[GridPoint]) -> Option<&GridPoint> {
    surface.iter().min_by(|a, b| {
        a.counts
            .edits()
            .cmp(&b.counts.edits())
            .then(a.alpha.abs().total_cmp(&b.alpha.abs()))
            .then(a.beta.total_cmp(&b.beta))
            .then(a.alpha.total_cmp(&b.alpha))
    })
}

/// Checks that every utterance has a reference.
pub fn check_references(utterances: &[(String, Emissions)], refs: &BTreeMap<String, String>) -> Result<(), TuneError> {
    match utterances.iter().find(|(id, _)| !refs.contains_key(id)) {
        Some((id, _)) => Err(TuneError::MissingReference(id.clone())),
        None => Ok(()),
    }
}

/// Pooled word error counts of the top hypotheses at one grid point.
pub fn evaluate_point<L: WordLm>(
    utterances: &[(String, Emissions)],
    refs: &BTreeMap<String, String>,
    lex: &Lexicon,
    lm: &L,
    alpha: f64,
    beta: f64,
    beam: usize,
) -> Result<ErrorCounts, TuneError> {
    let cfg = DecodeConfig::new(alpha, beta, beam, 1);
    let mut total = ErrorCounts::default();
    for (id, e) in utterances {
        let reference = refs.get(id).ok_or_else(|| TuneError::MissingReference(id.clone()))?;
        let out = decode(e, lex, lm, &cfg)?;
        total += word_counts(reference, &out.hypotheses[0].text());
    }
    Ok(total)
}

/// Decodes the validation set at every grid point with the tuning beam
/// and returns the point with the lowest corpus WER.
pub fn tune<L: WordLm>(
    utterances: &[(String, Emissions)],
    refs: &BTreeMap<String, String>,
    lex: &Lexicon,
    lm: &L,
    grid: &GridSpec,
) -> Result<TuneResult, TuneError> {
    check_references(utterances, refs)?;
    let mut surface = Vec::new();
    for (alpha, beta) in grid.points() {
        let counts = evaluate_point(utterances, refs, lex, lm, alpha, beta, grid.tune_beam)?;
        surface.push(GridPoint { alpha, beta, counts });
    }
    finish_tuning(surface, utterances.len())
}

/// Picks the best point of an evaluated surface.
pub fn finish_tuning(surface: Vec<GridPoint>, utterances: usize) -> Result<TuneResult, TuneError> {
    let best = *select_best(&surface).ok_or(TuneError::Empty)?;
    Ok(TuneResult {
        alpha: best.alpha,
        beta: best.beta,
        counts: best.counts,
        decodes: surface.len() * utterances,
        surface,
    })
}

/// One line of an n-best list. Scores are natural logs.
#[derive(Debug, Clone, PartialEq)]
pub struct NBestEntry {
    pub utt_id: String,
    pub rank: u32,
    pub am_score: f64,
    pub lm_score: f64,
    pub word_count: usize,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescoreWeights {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
}

/// External LM log-probabilities keyed by `(utt_id, rank)`.
pub type ElmScores = BTreeMap<(String, u32), f64>;

/// `am + alpha1 * lm + beta * |y| + alpha2 * elm`.
pub fn rescore_score(e: &NBestEntry, elm: f64, w: &RescoreWeights) -> f64 {
    score_hypothesis(e.am_score, e.lm_score, e.word_count, w.alpha1, w.beta) + w.alpha2 * elm
}

/// Groups entries by utterance, each list ordered by rank.
pub fn group_nbest(entries: Vec<NBestEntry>) -> BTreeMap<String, Vec<NBestEntry>> {
    let mut out: BTreeMap<String, Vec<NBestEntry>> = BTreeMap::new();
    for e in entries {
        out.entry(e.utt_id.clone()).or_default().push(e);
    }
    out.values_mut().for_each(|l| l.sort_by_key(|e| e.rank));
    out
}

fn missing_scores(lists: &BTreeMap<String, Vec<NBestEntry>>, elm: &ElmScores) -> Result<(), TuneError> {
    let missing: Vec<(String, u32)> = lists
        .values()
        .flatten()
        .filter(|e| !elm.contains_key(&(e.utt_id.clone(), e.rank)))
        .map(|e| (e.utt_id.clone(), e.rank))
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(TuneError::MissingScore(missing))
    }
}

fn elm_of(elm: &ElmScores, e: &NBestEntry) -> f64 {
    elm[&(e.utt_id.clone(), e.rank)]
}

/// Positions of `list` ordered by rescored value, best first; ties keep
/// the original rank order.
pub fn rank_nbest(list: &[NBestEntry], elm: &ElmScores, w: &RescoreWeights) -> Vec<usize> {
    let scores: Vec<f64> = list.iter().map(|e| rescore_score(e, elm_of(elm, e), w)).collect();
    let mut order: Vec<usize> = (0..list.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(list[a].rank.cmp(&list[b].rank)));
    order
}

/// Best entry of every utterance under `w`.
pub fn rescore<'a>(
    lists: &'a BTreeMap<String, Vec<NBestEntry>>,
    elm: &ElmScores,
    w: &RescoreWeights,
) -> Result<BTreeMap<String, &'a NBestEntry>, TuneError> {
    missing_scores(lists, elm)?;
    Ok(lists.iter().filter(|(_, l)| !l.is_empty()).map(|(id, l)| (id.clone(), &l[rank_nbest(l, elm, w)[0]])).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescoreGrid {
    pub alpha1: GridRange,
    pub alpha2: GridRange,
    pub beta: GridRange,
}

impl Default for RescoreGrid {
    fn default() -> Self {
        let alpha = GridRange { lo: -4.0, hi: 4.0, step: 0.5 };
        Self { alpha1: alpha, alpha2: alpha, beta: GridRange { lo: 0.0, hi: 5.0, step: 0.5 } }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescoreTuneResult {
    pub weights: RescoreWeights,
    pub counts: ErrorCounts,
    pub surface: Vec<(RescoreWeights, ErrorCounts)>,
}

/// Pooled error counts of the rescored best entries.
pub fn rescore_counts(
    lists: &BTreeMap<String, Vec<NBestEntry>>,
    elm: &ElmScores,
    refs: &BTreeMap<String, String>,
    w: &RescoreWeights,
) -> Result<ErrorCounts, TuneError> {
    let best = rescore(lists, elm, w)?;
    let mut total = ErrorCounts::default();
    for (id, e) in best {
        let r = refs.get(&id).ok_or(TuneError::MissingReference(id))?;
        total += word_counts(r, &e.text);
    }
    Ok(total)
}

/// Grid search over `(alpha1, alpha2, beta)` minimizing corpus WER. Ties go
/// to smaller `|alpha1|`, then `|alpha2|`, then `beta`.
pub fn tune_rescore_weights(
    lists: &BTreeMap<String, Vec<NBestEntry>>,
    elm: &ElmScores,
    refs: &BTreeMap<String, String>,
    grid: &RescoreGrid,
) -> Result<RescoreTuneResult, TuneError> {
    missing_scores(lists, elm)?;
    if let Some(id) = lists.keys().find(|id| !refs.contains_key(*id)) {
        return Err(TuneError::MissingReference(id.clone()));
    }
    let mut surface = Vec::new();
    for alpha1 in grid.alpha1.points() {
        for alpha2 in grid.alpha2.points() {
            for beta in grid.beta.points() {
                let w = RescoreWeights { alpha1, alpha2, beta };
                surface.push((w, rescore_counts(lists, elm, refs, &w)?));
            }
        }
    }
    let (weights, counts) = *surface
        .iter()
        .min_by(|(wa, ca), (wb, cb)| {
            ca.edits()
                .cmp(&cb.edits())
                .then(wa.alpha1.abs().total_cmp(&wb.alpha1.abs()))
                .then(wa.alpha2.abs().total_cmp(&wb.alpha2.abs()))
                .then(wa.beta.total_cmp(&wb.beta))
                .then(wa.alpha1.total_cmp(&wb.alpha1))
                .then(wa.alpha2.total_cmp(&wb.alpha2))
        })
        .ok_or(TuneError::Empty)?;
    Ok(RescoreTuneResult { weights, counts, surface })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn default_grid_sizes() {
        let g = GridSpec::default();
        assert_eq!(g.alpha.points().len(), 17);
        assert_eq!(g.beta.points().len(), 11);
        assert_eq!(g.points().len(), 187);
        assert_eq!(*g.beta.points().last().unwrap(), 5.0);
    }

    #[test]
    fn parse_ranges() {
        assert_eq!("-4:4:0.5".parse::<GridRange>().unwrap(), GridRange { lo: -4.0, hi: 4.0, step: 0.5 });
        assert_eq!("2".parse::<GridRange>().unwrap().points(), vec![2.0]);
        assert!("4:-4:0.5".parse::<GridRange>().is_err());
        assert!("0:1:0".parse::<GridRange>().is_err());
        assert!("a:b".parse::<GridRange>().is_err());
    }

    fn entry(rank: u32, am: f64, lm: f64, text: &str) -> NBestEntry {
        NBestEntry {
            utt_id: "u".into(),
            rank,
            am_score: am,
            lm_score: lm,
            word_count: text.split_whitespace().count(),
            text: text.into(),
        }
    }

    #[test]
    fn two_entry_hand_arithmetic() {
        // a: -1 + 0.5*-4 + 1*-1 + 2*1 = -2 ; b: -2 + 0.5*-2 + 1*-3 + 2*2 = -2.0 -> tie, rank order
        // with beta 2.5: a -1.5, b -1.0 -> b
        let lists = group_nbest(vec![entry(0, -1.0, -4.0, "a"), entry(1, -2.0, -2.0, "b c")]);
        let elm: ElmScores = [(("u".into(), 0), -1.0), (("u".into(), 1), -3.0)].into_iter().collect();
        let w = RescoreWeights { alpha1: 0.5, alpha2: 1.0, beta: 2.0 };
        assert_eq!(rescore(&lists, &elm, &w).unwrap()["u"].text, "a");
        let w = RescoreWeights { beta: 2.5, ..w };
        assert_eq!(rescore(&lists, &elm, &w).unwrap()["u"].text, "b c");
    }

    #[test]
    fn missing_scores_listed() {
        let lists = group_nbest(vec![entry(0, -1.0, -1.0, "a"), entry(1, -1.0, -1.0, "b")]);
        let elm: ElmScores = [(("u".into(), 0), -1.0)].into_iter().collect();
        let w = RescoreWeights { alpha1: 0.0, alpha2: 0.0, beta: 0.0 };
        assert_eq!(rescore(&lists, &elm, &w), Err(TuneError::MissingScore(vec![("u".into(), 1)])));
    }
}
