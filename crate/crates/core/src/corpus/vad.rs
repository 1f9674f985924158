//! Frame energy voice activity detection.
//!
//! A frame is speech when its energy exceeds an adaptive threshold: the
//! clip's 10th-percentile frame energy plus a margin, clamped between a
//! floor and a ceiling. Margin, floor and ceiling grow with the
//! aggressiveness. The percentile tracks the noise floor when at least a
//! tenth of the clip is non-speech; for clips that are nearly all speech
//! only frames above the ceiling are detected. Frames close to the threshold with a high zero-crossing
//! rate are rejected as noise. Non-speech gaps of at most
//! `hangover_frames` between two speech frames are filled in.
//!
//! Every rule only removes more frames as the aggressiveness rises, so
//! total detected speech never grows with the aggressiveness.

use alloc::vec::Vec;

use thiserror::Error;

use super::audio::{AudioClip, TARGET_RATE};
use crate::math;

const MARGIN_DB: [f64; 4] = [3.0, 6.0, 9.0, 12.0];
const FLOOR_DBFS: [f64; 4] = [-55.0, -50.0, -45.0, -40.0];
const CEILING_DBFS: [f64; 4] = [-30.0, -27.0, -24.0, -21.0];
const ZCR_LIMIT: [f64; 4] = [1.0, 0.5, 0.4, 0.3];
/// Frames this far above the threshold skip the zero-crossing test.
const ZCR_GUARD_DB: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum VadError {
    #[error("frame size must be 10, 20 or 30 ms, got {0}")]
    InvalidFrame(u32),
    #[error("aggressiveness must be 0..=3, got {0}")]
    InvalidAggressiveness(u8),
    #[error("clip must be 16 kHz mono")]
    NotStandardized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VadConfig {
    pub frame_ms: u32,
    pub aggressiveness: u8,
    pub hangover_frames: usize,
}

impl Default for VadConfig {
    fn default() -> Self {
        Self { frame_ms: 30, aggressiveness: 2, hangover_frames: 10 }
    }
}

impl VadConfig {
    pub fn new(frame_ms: u32, aggressiveness: u8, hangover_frames: usize) -> Result<Self, VadError> {
        let cfg = Self { frame_ms, aggressiveness, hangover_frames };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), VadError> {
        if ![10, 20, 30].contains(&self.frame_ms) {
            return Err(VadError::InvalidFrame(self.frame_ms));
        }
        if self.aggressiveness > 3 {
            return Err(VadError::InvalidAggressiveness(self.aggressiveness));
        }
        Ok(())
    }

    pub fn frame_len(&self) -> usize {
        (TARGET_RATE * self.frame_ms / 1000) as usize
    }
}

/// A speech interval in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start_s: f64,
    pub end_s: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

pub fn speech_duration(segments: &[Segment]) -> f64 {
    segments.iter().map(Segment::duration).sum()
}

/// Per-frame `(energy dBFS, zero-crossing rate)`. The last frame may be
/// shorter.
pub fn frame_features(samples: &[f32], frame_len: usize) -> Vec<(f64, f64)> {
    samples
        .chunks(frame_len)
        .map(|f| {
            let power = f.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>() / f.len() as f64;
            let crossings = f.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count();
            let zcr = if f.len() > 1 { crossings as f64 / (f.len() - 1) as f64 } else { 0.0 };
            (10.0 * math::log10(power + 1e-12), zcr)
        })
        .collect()
}

/// Speech flag per frame.
pub fn classify_frames(samples: &[f32], cfg: &VadConfig) -> Vec<bool> {
    let feats = frame_features(samples, cfg.frame_len());
    if feats.is_empty() {
        return Vec::new();
    }
    let a = usize::from(cfg.aggressiveness);
    let mut energies: Vec<f64> = feats.iter().map(|f| f.0).collect();
    energies.sort_unstable_by(f64::total_cmp);
    let p10 = energies[(energies.len() - 1) / 10];
    let threshold = (p10 + MARGIN_DB[a]).clamp(FLOOR_DBFS[a], CEILING_DBFS[a]);
    let mut speech: Vec<bool> = feats
        .iter()
        .map(|&(energy, zcr)| energy > threshold && !(zcr > ZCR_LIMIT[a] && energy < threshold + ZCR_GUARD_DB))
        .collect();
    bridge_gaps(&mut speech, cfg.hangover_frames);
    speech
}

/// Fills non-speech runs of at most `max_gap` frames lying between speech.
fn bridge_gaps(flags: &mut [bool], max_gap: usize) {
    let mut last_speech: Option<usize> = None;
    for i in 0..flags.len() {
        if flags[i] {
            if let Some(prev) = last_speech {
                let gap = i - prev - 1;
                if gap > 0 && gap <= max_gap {
                    flags[prev + 1..i].iter_mut().for_each(|f| *f = true);
                }
            }
            last_speech = Some(i);
        }
    }
}

/// Sorted, non-overlapping speech segments within the clip.
pub fn detect_speech(clip: &AudioClip, cfg: &VadConfig) -> Result<Vec<Segment>, VadError> {
    cfg.validate()?;
    if !clip.is_standard() {
        return Err(VadError::NotStandardized);
    }
    let flags = classify_frames(&clip.samples, cfg);
    let frame_s = f64::from(cfg.frame_ms) / 1000.0;
    let duration = clip.duration_s();
    let mut out = Vec::new();
    let mut start = None;
    for (i, &f) in flags.iter().chain(core::iter::once(&false)).enumerate() {
        match (f, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(Segment { start_s: s as f64 * frame_s, end_s: (i as f64 * frame_s).min(duration) });
                start = None;
            }
            _ => {}
        }
    }
    Ok(out)
}
