//! CTC emissions: greedy decoding, sequence likelihood and forced alignment.
//!
//! All scores are natural logs. The CTC lattice for a target `l` of length
//! `L` is the extended sequence `blank l1 blank l2 ... lL blank`; a frame
//! path is valid when every step stays, advances by one, or skips a blank
//! between two different labels.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::math::{self, LOG_ZERO};

/// Row normalization tolerance for [`Emissions::new`].
pub const ROW_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CtcError {
    #[error("emissions have no frames")]
    NoFrames,
    #[error("emission matrix has {got} values, expected {frames}x{classes}")]
    Shape { frames: usize, classes: usize, got: usize },
    #[error("blank index {blank} out of range for {classes} classes")]
    BlankOutOfRange { blank: usize, classes: usize },
    #[error("vocabulary has {got} tokens but emissions have {classes} classes")]
    VocabSize { got: usize, classes: usize },
    #[error("frame {frame} log-sum-exp is {lse}, expected 0")]
    NotNormalized { frame: usize, lse: f64 },
    #[error("frame {frame} contains a NaN or +inf score")]
    NonFinite { frame: usize },
    #[error("target position {position} holds invalid class {class}")]
    InvalidTarget { position: usize, class: usize },
    #[error("target needs at least {required} frames, emissions have {frames}")]
    Infeasible { required: usize, frames: usize },
}

/// A `frames x classes` matrix of per-frame log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Emissions {
    frames: usize,
    classes: usize,
    data: Vec<f64>,
    vocab: Vec<String>,
    blank: usize,
    frame_duration_s: f64,
}

impl Emissions {
    /// Builds emissions and checks that every row is a log distribution.
    pub fn new(
        frames: usize,
        classes: usize,
        data: Vec<f64>,
        vocab: Vec<String>,
        blank: usize,
        frame_duration_s: f64,
    ) -> Result<Self, CtcError> {
        let e = Self::with_unnormalized_rows(frames, classes, data, vocab, blank, frame_duration_s)?;
        for t in 0..e.frames {
            let lse = math::log_sum_exp(e.row(t));
            if !(lse.abs() <= ROW_TOLERANCE) {
                return Err(CtcError::NotNormalized { frame: t, lse });
            }
        }
        Ok(e)
    }

    /// Same as [`Emissions::new`] without the row normalization check, for
    /// scaled or otherwise unnormalized acoustic scores.
    pub fn with_unnormalized_rows(
        frames: usize,
        classes: usize,
        data: Vec<f64>,
        vocab: Vec<String>,
        blank: usize,
        frame_duration_s: f64,
    ) -> Result<Self, CtcError> {
        if frames == 0 {
            return Err(CtcError::NoFrames);
        }
        if data.len() != frames * classes {
            return Err(CtcError::Shape { frames, classes, got: data.len() });
        }
        if blank >= classes {
            return Err(CtcError::BlankOutOfRange { blank, classes });
        }
        if vocab.len() != classes {
            return Err(CtcError::VocabSize { got: vocab.len(), classes });
        }
        if let Some(i) = data.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(CtcError::NonFinite { frame: i / classes });
        }
        Ok(Self { frames, classes, data, vocab, blank, frame_duration_s })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn blank(&self) -> usize {
        self.blank
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.frame_duration_s
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.classes..(t + 1) * self.classes]
    }

    #[inline]
    pub fn get(&self, t: usize, c: usize) -> f64 {
        self.data[t * self.classes + c]
    }

    /// Class index of a vocabulary token.
    pub fn class_of(&self, token: &str) -> Option<usize> {
        self.vocab.iter().position(|v| v == token)
    }

    /// Vocabulary tokens for a class sequence.
    pub fn tokens(&self, classes: &[usize]) -> Vec<&str> {
        classes.iter().map(|&c| self.vocab[c].as_str()).collect()
    }

    /// Adds `offset` to every score. The result is generally unnormalized.
    pub fn shifted(&self, offset: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v += offset);
        out
    }
}

/// Frame-level labels and their CTC collapse.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub frame_labels: Vec<usize>,
    pub collapsed: Vec<usize>,
    /// Log probability of this single frame path.
    pub log_prob: f64,
}

/// Merges repeats, then removes blanks.
pub fn collapse(frame_labels: &[usize], blank: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &c in frame_labels {
        if Some(c) != prev && c != blank {
            out.push(c);
        }
        prev = Some(c);
    }
    out
}

/// Per-frame argmax followed by [`collapse`]. Ties go to the lower class index.
pub fn greedy_decode(e: &Emissions) -> Vec<usize> {
    let path: Vec<usize> = (0..e.frames)
        .map(|t| {
            let row = e.row(t);
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    collapse(&path, e.blank)
}

/// Minimum number of frames a target needs: one per label plus one blank
/// between each pair of equal neighbours.
pub fn min_frames(target: &[usize]) -> usize {
    target.len() + target.windows(2).filter(|w| w[0] == w[1]).count()
}

fn check_target(e: &Emissions, target: &[usize]) -> Result<(), CtcError> {
    for (position, &class) in target.iter().enumerate() {
        if class >= e.classes || class == e.blank {
            return Err(CtcError::InvalidTarget { position, class });
        }
    }
    let required = min_frames(target);
    if required > e.frames {
        return Err(CtcError::Infeasible { required, frames: e.frames });
    }
    Ok(())
}

fn extended(target: &[usize], blank: usize) -> Vec<usize> {
    let mut ext = Vec::with_capacity(2 * target.len() + 1);
    ext.push(blank);
    for &c in target {
        ext.push(c);
        ext.push(blank);
    }
    ext
}

/// Whether lattice state `s` may be entered from `s - 2`.
#[inline]
fn can_skip(ext: &[usize], s: usize, blank: usize) -> bool {
    s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]
}

/// Log-likelihood of `target` summed over every valid CTC alignment.
pub fn ctc_loglik(e: &Emissions, target: &[usize]) -> Result<f64, CtcError> {
    check_target(e, target)?;
    let ext = extended(target, e.blank);
    let s_len = ext.len();
    let mut alpha = vec![LOG_ZERO; s_len];
    alpha[0] = e.get(0, ext[0]);
    if s_len > 1 {
        alpha[1] = e.get(0, ext[1]);
    }
    let mut next = vec![LOG_ZERO; s_len];
    for t in 1..e.frames {
        for s in 0..s_len {
            let mut acc = alpha[s];
            if s >= 1 {
                acc = math::log_add(acc, alpha[s - 1]);
            }
            if can_skip(&ext, s, e.blank) {
                acc = math::log_add(acc, alpha[s - 2]);
            }
            next[s] = if acc == LOG_ZERO { LOG_ZERO } else { acc + e.get(t, ext[s]) };
        }
        core::mem::swap(&mut alpha, &mut next);
    }
    let last = alpha[s_len - 1];
    Ok(if s_len > 1 { math::log_add(last, alpha[s_len - 2]) } else { last })
}

/// Most probable valid frame path for `target` (Viterbi over the CTC lattice).
pub fn force_align(e: &Emissions, target: &[usize]) -> Result<Alignment, CtcError> {
    check_target(e, target)?;
    let ext = extended(target, e.blank);
    let s_len = ext.len();
    let t_len = e.frames;
    // back[t * s_len + s] = predecessor state at t - 1
    let mut back = vec![0usize; t_len * s_len];
    let mut score = vec![LOG_ZERO; s_len];
    score[0] = e.get(0, ext[0]);
    if s_len > 1 {
        score[1] = e.get(0, ext[1]);
    }
    let mut next = vec![LOG_ZERO; s_len];
    for t in 1..t_len {
        for s in 0..s_len {
            let mut best = score[s];
            let mut from = s;
            if s >= 1 && score[s - 1] > best {
                best = score[s - 1];
                from = s - 1;
            }
            if can_skip(&ext, s, e.blank) && score[s - 2] > best {
                best = score[s - 2];
                from = s - 2;
            }
            next[s] = if best == LOG_ZERO { LOG_ZERO } else { best + e.get(t, ext[s]) };
            back[t * s_len + s] = from;
        }
        core::mem::swap(&mut score, &mut next);
    }
    let mut s = s_len - 1;
    if s_len > 1 && score[s_len - 2] > score[s_len - 1] {
        s = s_len - 2;
    }
    let log_prob = score[s];
    let mut frame_labels = vec![0usize; t_len];
    for t in (0..t_len).rev() {
        frame_labels[t] = ext[s];
        if t > 0 {
            s = back[t * s_len + s];
        }
    }
    let collapsed = collapse(&frame_labels, e.blank);
    Ok(Alignment { frame_labels, collapsed, log_prob })
}

/// Whether a frame path is reachable in the CTC lattice of its own collapse.
pub fn is_valid_path(frame_labels: &[usize], target: &[usize], blank: usize) -> bool {
    collapse(frame_labels, blank) == target
}
