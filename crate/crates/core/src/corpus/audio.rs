//! In-memory audio and conversion to 16 kHz mono.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

use crate::math;

pub const TARGET_RATE: u32 = 16_000;
pub const MIN_RATE: u32 = 8_000;
pub const MAX_RATE: u32 = 48_000;
/// Taps of the interpolation kernel.
pub const RESAMPLER_TAPS: usize = 64;
/// Cutoff as a fraction of the lower of the two Nyquist frequencies.
const ROLLOFF: f64 = 0.95;
/// Largest upsampling factor whose kernels are precomputed.
const MAX_TABLE_PHASES: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AudioError {
    #[error("sample rate {0} Hz outside 8000..=48000")]
    UnsupportedRate(u32),
    #[error("clip has no samples")]
    EmptyAudio,
    #[error("clip has zero channels")]
    NoChannels,
    #[error("{samples} interleaved samples do not divide into {channels} channels")]
    RaggedChannels { samples: usize, channels: u16 },
}

/// Interleaved PCM samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub channels: u16,
    pub source_id: String,
    pub language: String,
}

impl AudioClip {
    pub fn mono(samples: Vec<f32>, sample_rate: u32) -> Self {
        Self { samples, sample_rate, channels: 1, source_id: String::new(), language: String::new() }
    }

    /// Samples per channel.
    pub fn frames(&self) -> usize {
        self.samples.len() / usize::from(self.channels.max(1))
    }

    pub fn duration_s(&self) -> f64 {
        self.frames() as f64 / f64::from(self.sample_rate)
    }

    pub fn is_standard(&self) -> bool {
        self.sample_rate == TARGET_RATE && self.channels == 1
    }
}

/// Averages interleaved channels.
pub fn downmix(samples: &[f32], channels: u16) -> Vec<f32> {
    let ch = usize::from(channels);
    if ch == 1 {
        return samples.to_vec();
    }
    samples
        .chunks_exact(ch)
        .map(|frame| (frame.iter().map(|&x| f64::from(x)).sum::<f64>() / ch as f64) as f32)
        .collect()
}

/// Converts to 16 kHz mono. A clip that is already 16 kHz mono is returned
/// unchanged, so the conversion is idempotent.
pub fn standardize(clip: &AudioClip) -> Result<AudioClip, AudioError> {
    if clip.channels == 0 {
        return Err(AudioError::NoChannels);
    }
    if !(MIN_RATE..=MAX_RATE).contains(&clip.sample_rate) {
        return Err(AudioError::UnsupportedRate(clip.sample_rate));
    }
    if clip.samples.is_empty() {
        return Err(AudioError::EmptyAudio);
    }
    if !clip.samples.len().is_multiple_of(usize::from(clip.channels)) {
        return Err(AudioError::RaggedChannels { samples: clip.samples.len(), channels: clip.channels });
    }
    if clip.is_standard() {
        return Ok(clip.clone());
    }
    let mono = downmix(&clip.samples, clip.channels);
    let samples = if clip.sample_rate == TARGET_RATE {
        mono
    } else {
        Resampler::new(clip.sample_rate, TARGET_RATE).process(&mono)
    };
    Ok(AudioClip {
        samples,
        sample_rate: TARGET_RATE,
        channels: 1,
        source_id: clip.source_id.clone(),
        language: clip.language.clone(),
    })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        math::sin(PI * x) / (PI * x)
    }
}

fn blackman(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        0.42 + 0.5 * math::cos(PI * u) + 0.08 * math::cos(2.0 * PI * u)
    }
}

/// Polyphase windowed-sinc resampler with a rational ratio `up / down`.
#[derive(Debug, Clone)]
pub struct Resampler {
    up: u64,
    down: u64,
    cutoff: f64,
    table: Option<Vec<f64>>,
}

const HALF: i64 = (RESAMPLER_TAPS / 2) as i64;

impl Resampler {
    pub fn new(from: u32, to: u32) -> Self {
        let g = gcd(u64::from(from), u64::from(to));
        let up = u64::from(to) / g;
        let down = u64::from(from) / g;
        let cutoff = ROLLOFF * (up as f64 / down as f64).min(1.0);
        let mut r = Self { up, down, cutoff, table: None };
        if up <= MAX_TABLE_PHASES {
            let mut table = Vec::with_capacity(up as usize * RESAMPLER_TAPS);
            for phase in 0..up {
                table.extend_from_slice(&r.kernel(phase));
            }
            r.table = Some(table);
        }
        r
    }

    /// Normalized taps for input offsets `-31..=32` around the output
    /// position `base + phase / up`.
    fn kernel(&self, phase: u64) -> [f64; RESAMPLER_TAPS] {
        let frac = phase as f64 / self.up as f64;
        let mut k = [0.0; RESAMPLER_TAPS];
        let mut sum = 0.0;
        for (slot, j) in k.iter_mut().zip(-(HALF - 1)..=HALF) {
            let x = j as f64 - frac;
            *slot = self.cutoff * sinc(self.cutoff * x) * blackman(x / HALF as f64);
            sum += *slot;
        }
        k.iter_mut().for_each(|v| *v /= sum);
        k
    }

    /// Output length: `round(n * up / down)`.
    pub fn output_len(&self, n: usize) -> usize {
        ((n as u64 * self.up + self.down / 2) / self.down) as usize
    }

    pub fn process(&self, input: &[f32]) -> Vec<f32> {
        let n_out = self.output_len(input.len());
        let mut out = Vec::with_capacity(n_out);
        let mut scratch;
        for n in 0..n_out as u64 {
            let pos = n * self.down;
            let base = (pos / self.up) as i64;
            let phase = pos % self.up;
            let taps: &[f64] = match &self.table {
                Some(t) => &t[phase as usize * RESAMPLER_TAPS..(phase as usize + 1) * RESAMPLER_TAPS],
                None => {
                    scratch = self.kernel(phase);
                    &scratch
                }
            };
            let mut acc = 0.0;
            for (w, j) in taps.iter().zip(-(HALF - 1)..=HALF) {
                let i = base + j;
                if i >= 0 && (i as usize) < input.len() {
                    acc += w * f64::from(input[i as usize]);
                }
            }
            out.push(acc.clamp(-1.0, 1.0) as f32);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn standard_clip_unchanged() {
        let clip = AudioClip::mono(vec![0.1, -0.2, 0.3], TARGET_RATE);
        assert_eq!(standardize(&clip).unwrap(), clip);
    }

    #[test]
    fn identical_stereo_channels_downmix_exactly() {
        let mono = [0.25f32, -0.5, 0.125, 1.0];
        let stereo: Vec<f32> = mono.iter().flat_map(|&x| [x, x]).collect();
        let clip = AudioClip {
            samples: stereo,
            sample_rate: TARGET_RATE,
            channels: 2,
            source_id: String::new(),
            language: String::new(),
        };
        assert_eq!(standardize(&clip).unwrap().samples, mono);
    }

    #[test]
    fn rate_limits() {
        let clip = AudioClip::mono(vec![0.0; 10], 7_999);
        assert_eq!(standardize(&clip), Err(AudioError::UnsupportedRate(7_999)));
        let clip = AudioClip::mono(Vec::new(), 8_000);
        assert_eq!(standardize(&clip), Err(AudioError::EmptyAudio));
    }

    #[test]
    fn dc_preserved_and_lengths_rounded() {
        for rate in [8_000, 11_025, 22_050, 44_100, 48_000, 9_001] {
            let r = Resampler::new(rate, TARGET_RATE);
            let out = r.process(&vec![0.5f32; rate as usize]);
            assert_eq!(out.len(), 16_000, "rate {rate}");
            // away from the edges the kernel has unit gain
            assert!(out[8_000..8_100].iter().all(|&x| (x - 0.5).abs() < 1e-6), "rate {rate}");
        }
    }
}
