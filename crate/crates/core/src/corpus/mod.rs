//! Corpus curation: standardization, voice activity detection, SNR
//! estimation, SNR filtering and chunking, and pseudo-label filtering.

mod audio;
mod snr;
mod vad;

pub use audio::{
    downmix, standardize, AudioClip, AudioError, Resampler, MAX_RATE, MIN_RATE, RESAMPLER_TAPS, TARGET_RATE,
};
pub use snr::{
    snr_from_statistic, wada_snr, wada_snr_samples, SnrError, MIN_DURATION_S, SNR_MAX_DB, SNR_MIN_DB, WADA_TABLE,
};
pub use vad::{classify_frames, detect_speech, frame_features, speech_duration, Segment, VadConfig, VadError};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

/// Clips with an SNR below this are dropped.
pub const DEFAULT_SNR_THRESHOLD_DB: f64 = 15.0;
pub const DEFAULT_MAX_CHUNK_S: f64 = 25.0;
/// How far before the length limit a chunk boundary may move to reach
/// silence.
pub const DEFAULT_SEARCH_WINDOW_S: f64 = 5.0;
/// Pseudo-label transcripts need at least this many words.
pub const MIN_PSEUDO_LABEL_WORDS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub clip_path: String,
    pub language: String,
    pub duration_s: f64,
    pub snr_db: f64,
    pub speech_ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusManifest {
    pub entries: Vec<CorpusEntry>,
}

impl CorpusManifest {
    pub fn new(entries: Vec<CorpusEntry>) -> Self {
        Self { entries }
    }

    /// Hours per language, recomputed from the entries.
    pub fn per_language_hours(&self) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> = BTreeMap::new();
        for e in &self.entries {
            *out.entry(e.language.clone()).or_insert(0.0) += e.duration_s / 3600.0;
        }
        out
    }

    pub fn total_hours(&self) -> f64 {
        self.entries.iter().map(|e| e.duration_s).sum::<f64>() / 3600.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ChunkError {
    #[error("maximum chunk length must be positive, got {0}")]
    InvalidMaxChunk(f64),
    #[error("search window must be non-negative, got {0}")]
    InvalidWindow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkConfig {
    pub snr_threshold_db: f64,
    pub max_chunk_s: f64,
    pub search_window_s: f64,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            snr_threshold_db: DEFAULT_SNR_THRESHOLD_DB,
            max_chunk_s: DEFAULT_MAX_CHUNK_S,
            search_window_s: DEFAULT_SEARCH_WINDOW_S,
        }
    }
}

/// A standardized clip's manifest entry with its speech segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipRecord {
    pub entry: CorpusEntry,
    pub speech: Vec<Segment>,
}

/// Where a chunk comes from: index into the input records and the time
/// span within that clip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkSpan {
    pub source: usize,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Chunked {
    pub manifest: CorpusManifest,
    /// Parallel to `manifest.entries`.
    pub spans: Vec<ChunkSpan>,
}

/// Silent intervals of `[0, duration]` not covered by `speech`.
pub fn silences(speech: &[Segment], duration: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut cursor = 0.0;
    for s in speech {
        if s.start_s > cursor {
            out.push(Segment { start_s: cursor, end_s: s.start_s.min(duration) });
        }
        cursor = cursor.max(s.end_s);
    }
    if cursor < duration {
        out.push(Segment { start_s: cursor, end_s: duration });
    }
    out
}

/// Chunk boundaries for a clip of `duration` seconds.
///
/// While the remainder exceeds `max_chunk_s`, the next boundary is the
/// midpoint of the latest silence overlapping the last `search_window_s`
/// seconds before the limit, clamped into that window, or the limit itself
/// when there is none.
pub fn chunk_boundaries(speech: &[Segment], duration: f64, cfg: &ChunkConfig) -> Result<Vec<(f64, f64)>, ChunkError> {
    if !(cfg.max_chunk_s > 0.0) {
        return Err(ChunkError::InvalidMaxChunk(cfg.max_chunk_s));
    }
    if !(cfg.search_window_s >= 0.0) {
        return Err(ChunkError::InvalidWindow(cfg.search_window_s));
    }
    let quiet = silences(speech, duration);
    let mut out = Vec::new();
    let mut pos = 0.0;
    while duration - pos > cfg.max_chunk_s {
        let limit = pos + cfg.max_chunk_s;
        let lo = (limit - cfg.search_window_s).max(pos);
        let cut = quiet
            .iter()
            .rev()
            .find(|s| s.end_s.min(limit) > s.start_s.max(lo))
            .map(|s| (0.5 * (s.start_s + s.end_s)).clamp(lo, limit))
            .filter(|&c| c > pos)
            .unwrap_or(limit);
        out.push((pos, cut));
        pos = cut;
    }
    if duration > pos {
        out.push((pos, duration));
    }
    Ok(out)
}

fn chunk_path(path: &str, index: usize) -> String {
    let stem_end = match path.rfind('.') {
        Some(dot) if !path[dot..].contains('/') => dot,
        _ => path.len(),
    };
    format!("{}_{:03}{}", &path[..stem_end], index, &path[stem_end..])
}

fn overlap(speech: &[Segment], start: f64, end: f64) -> f64 {
    speech.iter().map(|s| (s.end_s.min(end) - s.start_s.max(start)).max(0.0)).sum()
}

/// Drops clips below the SNR threshold and splits the rest into chunks of
/// at most `max_chunk_s`. A clip short enough to stay whole keeps its
/// entry unchanged; otherwise chunk `k` is named `<stem>_<kkk><ext>` and
/// inherits the clip's SNR.
pub fn filter_and_chunk(records: &[ClipRecord], cfg: &ChunkConfig) -> Result<Chunked, ChunkError> {
    let mut out = Chunked::default();
    for (source, r) in records.iter().enumerate() {
        if !(r.entry.snr_db >= cfg.snr_threshold_db) {
            continue;
        }
        let bounds = chunk_boundaries(&r.speech, r.entry.duration_s, cfg)?;
        if bounds.len() == 1 {
            out.manifest.entries.push(r.entry.clone());
            out.spans.push(ChunkSpan { source, start_s: 0.0, end_s: r.entry.duration_s });
            continue;
        }
        for (k, (start, end)) in bounds.into_iter().enumerate() {
            let duration = end - start;
            out.manifest.entries.push(CorpusEntry {
                clip_path: chunk_path(&r.entry.clip_path, k),
                language: r.entry.language.clone(),
                duration_s: duration,
                snr_db: r.entry.snr_db,
                speech_ratio: (overlap(&r.speech, start, end) / duration).clamp(0.0, 1.0),
            });
            out.spans.push(ChunkSpan { source, start_s: start, end_s: end });
        }
    }
    Ok(out)
}

/// Keeps records whose transcript has at least three words, in order.
pub fn filter_pseudo_labels<A, T: AsRef<str>>(records: impl IntoIterator<Item = (A, T)>) -> Vec<(A, T)> {
    records.into_iter().filter(|(_, t)| t.as_ref().split_whitespace().count() >= MIN_PSEUDO_LABEL_WORDS).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn entry(path: &str, duration: f64, snr: f64) -> CorpusEntry {
        CorpusEntry {
            clip_path: path.into(),
            language: "hi".into(),
            duration_s: duration,
            snr_db: snr,
            speech_ratio: 1.0,
        }
    }

    fn seg(a: f64, b: f64) -> Segment {
        Segment { start_s: a, end_s: b }
    }

    #[test]
    fn snr_threshold_is_inclusive() {
        let records = [
            ClipRecord { entry: entry("a.wav", 5.0, 14.9), speech: vec![] },
            ClipRecord { entry: entry("b.wav", 5.0, 15.0), speech: vec![] },
        ];
        let out = filter_and_chunk(&records, &ChunkConfig::default()).unwrap();
        assert_eq!(out.manifest.entries.len(), 1);
        assert_eq!(out.manifest.entries[0].clip_path, "b.wav");
    }

    #[test]
    fn short_clip_retained_unchanged() {
        let r = ClipRecord { entry: entry("x/a.wav", 24.0, 20.0), speech: vec![seg(0.0, 24.0)] };
        let out = filter_and_chunk(core::slice::from_ref(&r), &ChunkConfig::default()).unwrap();
        assert_eq!(out.manifest.entries, vec![r.entry]);
    }

    #[test]
    fn cuts_at_silences() {
        let speech = vec![seg(0.0, 23.9), seg(24.1, 48.9), seg(49.1, 60.0)];
        let b = chunk_boundaries(&speech, 60.0, &ChunkConfig::default()).unwrap();
        assert_eq!(b.len(), 3);
        assert!((b[0].1 - 24.0).abs() < 1e-9);
        assert!((b[1].1 - 49.0).abs() < 1e-9);
        assert_eq!(b[2].1, 60.0);
    }

    #[test]
    fn hard_cut_without_silence() {
        let b = chunk_boundaries(&[seg(0.0, 60.0)], 60.0, &ChunkConfig::default()).unwrap();
        assert_eq!(b, vec![(0.0, 25.0), (25.0, 50.0), (50.0, 60.0)]);
    }

    #[test]
    fn chunk_names() {
        assert_eq!(chunk_path("d/a.wav", 2), "d/a_002.wav");
        assert_eq!(chunk_path("d.x/a", 0), "d.x/a_000");
    }

    #[test]
    fn pseudo_labels() {
        let recs = vec![(1, "नमस्ते"), (2, "a b c"), (3, "a b"), (4, "a b c d")];
        let kept: Vec<i32> = filter_pseudo_labels(recs).into_iter().map(|r| r.0).collect();
        assert_eq!(kept, vec![2, 4]);
    }
}
