//! Analyses of pretrained representations: codebook usage per language,
//! per-language layer centroids, and attention aggregated over aligned
//! spans.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

/// Entries per codebook group.
pub const CODEBOOK_ENTRIES: usize = 320;
/// Tolerance for attention row sums.
pub const ATTENTION_ROW_TOLERANCE: f64 = 1e-4;
/// Minimum share of row mass for a head to get a locality label.
pub const LOCALITY_THRESHOLD: f64 = 0.4;
/// Span id of frames outside any span.
pub const UNASSIGNED: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("codebook index ({g1}, {g2}) out of range")]
    CodeOutOfRange { g1: u16, g2: u16 },
    #[error("frame {0} is not assigned to a span")]
    UnassignedFrame(usize),
    #[error("expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("attention row {row} sums to {sum}")]
    RowSum { row: usize, sum: f64 },
    #[error("utterance has no frames")]
    EmptyUtterance,
    #[error("dimension {got} differs from {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodebookStream {
    pub language: String,
    pub indices: Vec<(u16, u16)>,
}

/// How the two codebook groups map to histogram columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CodeMode {
    /// One column per pair: `g1 * 320 + g2`.
    #[default]
    Combined,
    /// Columns `g1` and `320 + g2`; each frame counts once per group.
    PerGroup,
}

impl CodeMode {
    pub fn columns(self) -> usize {
        match self {
            CodeMode::Combined => CODEBOOK_ENTRIES * CODEBOOK_ENTRIES,
            CodeMode::PerGroup => 2 * CODEBOOK_ENTRIES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodebookHistogram {
    pub mode: CodeMode,
    /// Sorted language tags, one row each.
    pub languages: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl CodebookHistogram {
    pub fn row(&self, language: &str) -> Option<&[u64]> {
        let i = self.languages.iter().position(|l| l == language)?;
        Some(&self.counts[i])
    }

    pub fn row_sum(&self, language: &str) -> u64 {
        self.row(language).map_or(0, |r| r.iter().sum())
    }

    /// Columns by decreasing count in `language`, ties by column index.
    pub fn column_order(&self, language: &str) -> Option<Vec<usize>> {
        let row = self.row(language)?;
        let mut cols: Vec<usize> = (0..row.len()).collect();
        cols.sort_by(|&a, &b| row[b].cmp(&row[a]).then(a.cmp(&b)));
        Some(cols)
    }

    /// `|A ∩ B| / min(|A|, |B|)` over the sets of codes each language uses.
    pub fn overlap_coefficient(&self, a: &str, b: &str) -> Option<f64> {
        let used =
            |r: &[u64]| -> BTreeSet<usize> { r.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, _)| i).collect() };
        let sa = used(self.row(a)?);
        let sb = used(self.row(b)?);
        let m = sa.len().min(sb.len());
        if m == 0 {
            return Some(0.0);
        }
        Some(sa.intersection(&sb).count() as f64 / m as f64)
    }
}

pub fn codebook_histogram(streams: &[CodebookStream], mode: CodeMode) -> Result<CodebookHistogram, AnalysisError> {
    let mut rows: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for s in streams {
        let row = rows.entry(s.language.as_str()).or_insert_with(|| vec![0; mode.columns()]);
        for &(g1, g2) in &s.indices {
            if usize::from(g1) >= CODEBOOK_ENTRIES || usize::from(g2) >= CODEBOOK_ENTRIES {
                return Err(AnalysisError::CodeOutOfRange { g1, g2 });
            }
            match mode {
                CodeMode::Combined => row[usize::from(g1) * CODEBOOK_ENTRIES + usize::from(g2)] += 1,
                CodeMode::PerGroup => {
                    row[usize::from(g1)] += 1;
                    row[CODEBOOK_ENTRIES + usize::from(g2)] += 1;
                }
            }
        }
    }
    Ok(CodebookHistogram {
        mode,
        languages: rows.keys().map(|l| String::from(*l)).collect(),
        counts: rows.into_values().collect(),
    })
}

/// Frame representations of one utterance at one layer, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    pub language: String,
    pub layer: u32,
    pub frames: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl FrameMatrix {
    pub fn new(language: String, layer: u32, frames: usize, dim: usize, data: Vec<f64>) -> Result<Self, AnalysisError> {
        if data.len() != frames * dim {
            return Err(AnalysisError::Shape { expected: frames * dim, got: data.len() });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(AnalysisError::NonFinite(i));
        }
        Ok(Self { language, layer, frames, dim, data })
    }

    /// Mean over frames.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for row in self.data.chunks_exact(self.dim.max(1)) {
            m.iter_mut().zip(row).for_each(|(a, &x)| *a += x);
        }
        m.iter_mut().for_each(|a| *a /= self.frames as f64);
        m
    }
}

/// Per language, the mean of the per-utterance frame means.
pub fn language_centroids(collections: &[FrameMatrix]) -> Result<BTreeMap<String, Vec<f64>>, AnalysisError> {
    let Some(first) = collections.first() else {
        return Ok(BTreeMap::new());
    };
    let dim = first.dim;
    let mut sums: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    for m in collections {
        if m.dim != dim {
            return Err(AnalysisError::DimensionMismatch { expected: dim, got: m.dim });
        }
        if m.frames == 0 {
            return Err(AnalysisError::EmptyUtterance);
        }
        let slot = sums.entry(m.language.as_str()).or_insert_with(|| (vec![0.0; dim], 0));
        slot.0.iter_mut().zip(m.mean()).for_each(|(a, x)| *a += x);
        slot.1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(l, (mut v, n))| {
            v.iter_mut().for_each(|a| *a /= n as f64);
            (String::from(l), v)
        })
        .collect())
}

/// One head's `frames x frames` attention and the span of every frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTensor {
    pub frames: usize,
    pub weights: Vec<f64>,
    pub spans: Vec<u32>,
}

impl AttentionTensor {
    /// Checks the shape and that rows sum to 1.
    pub fn new(frames: usize, weights: Vec<f64>, spans: Vec<u32>) -> Result<Self, AnalysisError> {
        let t = Self::unchecked(frames, weights, spans)?;
        for (row, r) in t.weights.chunks_exact(frames.max(1)).enumerate() {
            let sum: f64 = r.iter().sum();
            if !((sum - 1.0).abs() <= ATTENTION_ROW_TOLERANCE) {
                return Err(AnalysisError::RowSum { row, sum });
            }
        }
        Ok(t)
    }

    /// Checks the shape only, for sums of tensors and other unnormalized
    /// weights.
    pub fn unchecked(frames: usize, weights: Vec<f64>, spans: Vec<u32>) -> Result<Self, AnalysisError> {
        if weights.len() != frames * frames {
            return Err(AnalysisError::Shape { expected: frames * frames, got: weights.len() });
        }
        if spans.len() != frames {
            return Err(AnalysisError::Shape { expected: frames, got: spans.len() });
        }
        Ok(Self { frames, weights, spans })
    }
}

/// Square matrix over spans.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanMatrix {
    pub spans: usize,
    pub data: Vec<f64>,
}

impl SpanMatrix {
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.data[p * self.spans + q]
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// `ã[p][q] = Σ_{i ∈ p} Σ_{j ∈ q} a[i][j]`; the number of spans is the
/// largest span id plus one.
pub fn attention_aggregate(t: &AttentionTensor) -> Result<SpanMatrix, AnalysisError> {
    if let Some(i) = t.spans.iter().position(|&s| s == UNASSIGNED) {
        return Err(AnalysisError::UnassignedFrame(i));
    }
    let n = t.spans.iter().map(|&s| s as usize + 1).max().unwrap_or(0);
    let mut data = vec![0.0; n * n];
    for i in 0..t.frames {
        let p = t.spans[i] as usize;
        let row = &t.weights[i * t.frames..(i + 1) * t.frames];
        for (j, &w) in row.iter().enumerate() {
            data[p * n + t.spans[j] as usize] += w;
        }
    }
    Ok(SpanMatrix { spans: n, data })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum HeadLabel {
    NextSpan,
    PrevSpan,
    Silence,
    Other,
}

impl HeadLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            HeadLabel::NextSpan => "next-span",
            HeadLabel::PrevSpan => "prev-span",
            HeadLabel::Silence => "silence",
            HeadLabel::Other => "other",
        }
    }
}

/// Average row-normalized mass a head puts on the next span, the previous
/// span and silence spans other than the row itself.
pub fn locality_shares(m: &SpanMatrix, silence: &[bool]) -> [f64; 3] {
    let n = m.spans;
    let mut shares = [0.0; 3];
    let mut rows = 0usize;
    for p in 0..n {
        let total: f64 = (0..n).map(|q| m.get(p, q)).sum();
        if total <= 0.0 {
            continue;
        }
        rows += 1;
        if p + 1 < n {
            shares[0] += m.get(p, p + 1) / total;
        }
        if p > 0 {
            shares[1] += m.get(p, p - 1) / total;
        }
        shares[2] +=
            (0..n).filter(|&q| q != p && silence.get(q).copied().unwrap_or(false)).map(|q| m.get(p, q)).sum::<f64>()
                / total;
    }
    if rows > 0 {
        shares.iter_mut().for_each(|s| *s /= rows as f64);
    }
    shares
}

/// Labels each head by its largest locality share, or `Other` when that
/// share is below [`LOCALITY_THRESHOLD`]. Ties favour next, then previous,
/// then silence.
pub fn head_locality_profile(heads: &[SpanMatrix], silence: &[bool]) -> Vec<HeadLabel> {
    const LABELS: [HeadLabel; 3] = [HeadLabel::NextSpan, HeadLabel::PrevSpan, HeadLabel::Silence];
    heads
        .iter()
        .map(|m| {
            let shares = locality_shares(m, silence);
            let mut best = 0;
            for k in 1..3 {
                if shares[k] > shares[best] {
                    best = k;
                }
            }
            if shares[best] >= LOCALITY_THRESHOLD {
                LABELS[best]
            } else {
                HeadLabel::Other
            }
        })
        .collect()
}
