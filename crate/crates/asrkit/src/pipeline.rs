//! Corpus preparation over a directory tree of `<language>/<clip>.wav`.

use std::fs;
use std::path::{Path, PathBuf};

use asrkit_core::corpus::{
    detect_speech, filter_and_chunk, speech_duration, standardize, wada_snr, AudioClip, ChunkConfig, ClipRecord,
    CorpusEntry, CorpusManifest, SnrError, VadConfig, TARGET_RATE,
};
use log::{info, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formats::{list_files, manifest, wav};

pub const MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrepareConfig {
    pub vad: VadConfig,
    pub chunk: ChunkConfig,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrepareReport {
    pub clips: usize,
    pub too_short: usize,
    pub below_snr: usize,
    pub entries: usize,
    pub input_hours: f64,
    pub output_hours: f64,
}

/// Input clips as `(language, path)`, languages and files in sorted order.
pub fn discover(input: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(input).map_err(|e| Error::io(input, e))? {
        let path = entry.map_err(|e| Error::io(input, e))?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    let mut out = Vec::new();
    for d in dirs {
        let lang = d.file_name().unwrap_or_default().to_string_lossy().into_owned();
        out.extend(list_files(&d, "wav")?.into_iter().map(|p| (lang.clone(), p)));
    }
    Ok(out)
}

enum Outcome {
    Kept(Vec<CorpusEntry>),
    BelowSnr,
    TooShort,
}

fn slice(clip: &AudioClip, start_s: f64, end_s: f64) -> AudioClip {
    let rate = f64::from(TARGET_RATE);
    let a = ((start_s * rate).round() as usize).min(clip.samples.len());
    let b = ((end_s * rate).round() as usize).clamp(a, clip.samples.len());
    AudioClip { samples: clip.samples[a..b].to_vec(), ..clip.clone() }
}

fn prepare_clip(lang: &str, path: &Path, output: &Path, cfg: &PrepareConfig) -> Result<(f64, Outcome)> {
    let raw = wav::read(path)?;
    let input_s = raw.duration_s();
    let clip = standardize(&raw)?;
    let snr = match wada_snr(&clip) {
        Ok(s) => s,
        Err(SnrError::TooShort(d)) => {
            warn!("event=skip reason=too_short clip={} duration_s={d:.3}", path.display());
            return Ok((input_s, Outcome::TooShort));
        }
    };
    let speech = detect_speech(&clip, &cfg.vad)?;
    let duration = clip.duration_s();
    let file = path.file_name().unwrap_or_default().to_string_lossy();
    let record = ClipRecord {
        entry: CorpusEntry {
            clip_path: format!("{lang}/{file}"),
            language: lang.to_string(),
            duration_s: duration,
            snr_db: snr,
            speech_ratio: (speech_duration(&speech) / duration).clamp(0.0, 1.0),
        },
        speech,
    };
    let chunked = filter_and_chunk(std::slice::from_ref(&record), &cfg.chunk)?;
    if chunked.manifest.entries.is_empty() {
        return Ok((input_s, Outcome::BelowSnr));
    }
    for (entry, span) in chunked.manifest.entries.iter().zip(&chunked.spans) {
        let piece = if chunked.spans.len() == 1 { clip.clone() } else { slice(&clip, span.start_s, span.end_s) };
        wav::write(&output.join(&entry.clip_path), &piece)?;
    }
    Ok((input_s, Outcome::Kept(chunked.manifest.entries)))
}

/// Standardizes, filters and chunks every clip under `input`, writing the
/// audio and `manifest.tsv` under `output`. Clips are processed in
/// parallel; the manifest keeps the sorted input order.
pub fn prepare(input: &Path, output: &Path, cfg: &PrepareConfig) -> Result<(CorpusManifest, PrepareReport)> {
    cfg.vad.validate()?;
    let clips = discover(input)?;
    if clips.is_empty() {
        return Err(Error::Input(format!("no <language>/*.wav clips under {}", input.display())));
    }
    let results: Vec<(f64, Outcome)> =
        clips.par_iter().map(|(lang, path)| prepare_clip(lang, path, output, cfg)).collect::<Result<_>>()?;
    let mut report = PrepareReport { clips: clips.len(), ..Default::default() };
    let mut entries = Vec::new();
    for (input_s, outcome) in results {
        report.input_hours += input_s / 3600.0;
        match outcome {
            Outcome::Kept(e) => entries.extend(e),
            Outcome::BelowSnr => report.below_snr += 1,
            Outcome::TooShort => report.too_short += 1,
        }
    }
    let m = CorpusManifest::new(entries);
    report.entries = m.entries.len();
    report.output_hours = m.total_hours();
    manifest::write(&output.join(MANIFEST_FILE), &m)?;
    info!(
        "event=prepared clips={} below_snr={} too_short={} entries={} input_hours={:.6} output_hours={:.6}",
        report.clips, report.below_snr, report.too_short, report.entries, report.input_hours, report.output_hours
    );
    Ok((m, report))
}
