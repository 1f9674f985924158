use std::f64::consts::PI;

use asrkit_core::corpus::{
    chunk_boundaries, detect_speech, filter_and_chunk, filter_pseudo_labels, speech_duration, standardize, wada_snr,
    AudioClip, ChunkConfig, ClipRecord, CorpusEntry, Segment, VadConfig, TARGET_RATE,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use rustfft::{num_complex::Complex, FftPlanner};

fn sine(freq: f64, rate: u32, seconds: f64, amp: f64) -> Vec<f32> {
    let n = (rate as f64 * seconds) as usize;
    (0..n).map(|i| (amp * (2.0 * PI * freq * i as f64 / rate as f64).sin()) as f32).collect()
}

fn peak_frequency(samples: &[f32], rate: u32) -> f64 {
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x as f64, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    let half = buf.len() / 2;
    let bin = (1..half).max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm())).unwrap();
    bin as f64 * rate as f64 / buf.len() as f64
}

/// Speech-like samples: Gamma(0.4) amplitudes with random signs.
fn gamma_speech(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let g = Gamma::new(0.4, 1.0).unwrap();
    (0..n).map(|_| if rng.gen_bool(0.5) { g.sample(rng) } else { -g.sample(rng) }).collect()
}

fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

fn mix_at(speech: &[f64], rng: &mut ChaCha8Rng, snr_db: f64) -> Vec<f32> {
    let noise: Vec<f64> = (0..speech.len()).map(|_| Normal::new(0.0, 1.0).unwrap().sample(rng)).collect();
    let scale = (power(speech) / (power(&noise) * 10f64.powf(snr_db / 10.0))).sqrt();
    let mixed: Vec<f64> = speech.iter().zip(&noise).map(|(s, n)| s + scale * n).collect();
    let peak = mixed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    mixed.iter().map(|v| (0.9 * v / peak) as f32).collect()
}

#[test]
fn eight_khz_sine_upsamples_to_one_khz_peak() {
    let clip = AudioClip::mono(sine(1000.0, 8000, 1.0, 0.5), 8000);
    let out = standardize(&clip).unwrap();
    assert_eq!(out.sample_rate, TARGET_RATE);
    assert_eq!(out.samples.len(), 16_000);
    assert!((peak_frequency(&out.samples, TARGET_RATE) - 1000.0).abs() <= 1.0);
}

#[test]
fn downsampling_keeps_the_tone() {
    let clip = AudioClip::mono(sine(3000.0, 44_100, 0.5, 0.5), 44_100);
    let out = standardize(&clip).unwrap();
    assert_eq!(out.samples.len(), 8000);
    assert!((peak_frequency(&out.samples, TARGET_RATE) - 3000.0).abs() <= 2.0);
}

#[test]
fn stereo_is_downmixed() {
    let left = sine(440.0, 22_050, 0.2, 0.5);
    let samples: Vec<f32> = left.iter().flat_map(|&x| [x, -x]).collect();
    let clip = AudioClip { samples, sample_rate: 22_050, channels: 2, source_id: "s".into(), language: "hi".into() };
    let out = standardize(&clip).unwrap();
    assert_eq!(out.channels, 1);
    assert!(out.samples.iter().all(|x| x.abs() < 1e-6));
}

fn noise_burst(seed: u64) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = vec![0.0f32; 16_000];
    s.extend((0..16_000).map(|_| rng.gen_range(-1.0f32..=1.0)));
    s.extend(vec![0.0f32; 16_000]);
    AudioClip::mono(s, TARGET_RATE)
}

#[test]
fn noise_between_silences_is_one_segment() {
    let cfg = VadConfig::default();
    let segs = detect_speech(&noise_burst(1), &cfg).unwrap();
    assert_eq!(segs.len(), 1);
    let tol = 2.0 * cfg.frame_ms as f64 / 1000.0;
    assert!((segs[0].start_s - 1.0).abs() <= tol, "{segs:?}");
    assert!((segs[0].end_s - 2.0).abs() <= tol, "{segs:?}");
}

#[test]
fn clean_gamma_signal_reads_as_clean() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let speech = gamma_speech(&mut rng, 32_000);
    let peak = speech.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let samples: Vec<f32> = speech.iter().map(|v| (0.9 * v / peak) as f32).collect();
    let snr = wada_snr(&AudioClip::mono(samples, TARGET_RATE)).unwrap();
    assert!(snr >= 40.0, "{snr}");
}

#[test]
fn mixtures_are_estimated_within_three_db() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for target in [0.0, 5.0, 10.0, 15.0, 20.0] {
        for _ in 0..3 {
            let speech = gamma_speech(&mut rng, 32_000);
            let clip = AudioClip::mono(mix_at(&speech, &mut rng, target), TARGET_RATE);
            let snr = wada_snr(&clip).unwrap();
            assert!((snr - target).abs() <= 3.0, "{target}: {snr}");
        }
    }
}

#[test]
fn pure_noise_reads_near_the_floor() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = Normal::new(0.0, 0.2).unwrap();
    let samples: Vec<f32> = (0..32_000).map(|_| n.sample(&mut rng) as f32).collect();
    let snr = wada_snr(&AudioClip::mono(samples, TARGET_RATE)).unwrap();
    assert!(snr <= -10.0, "{snr}");
}

#[test]
fn sixty_second_clip_splits_at_its_silences() {
    let speech = [
        Segment { start_s: 0.0, end_s: 23.8 },
        Segment { start_s: 24.2, end_s: 48.8 },
        Segment { start_s: 49.2, end_s: 60.0 },
    ];
    let b = chunk_boundaries(&speech, 60.0, &ChunkConfig::default()).unwrap();
    let expected = [(0.0, 24.0), (24.0, 49.0), (49.0, 60.0)];
    assert_eq!(b.len(), 3);
    for (got, want) in b.iter().zip(expected) {
        assert!((got.0 - want.0).abs() < 1e-9 && (got.1 - want.1).abs() < 1e-9, "{b:?}");
    }
}

#[test]
fn short_transcripts_are_removed() {
    let records: Vec<(usize, String)> =
        (0..100).map(|i| (i, if i % 10 == 3 { "two words".to_string() } else { "a b c d".to_string() })).collect();
    assert_eq!(filter_pseudo_labels(records).len(), 90);
}

fn record_strategy() -> impl Strategy<Value = ClipRecord> {
    (0.5f64..120.0, -10.0f64..40.0, prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 0..12), 0usize..3).prop_map(
        |(duration, snr, raw, lang)| {
            let mut cuts: Vec<f64> = raw.iter().flat_map(|(a, b)| [a * duration, b * duration]).collect();
            cuts.sort_by(f64::total_cmp);
            let speech = cuts.chunks_exact(2).map(|p| Segment { start_s: p[0], end_s: p[1] }).collect();
            ClipRecord {
                entry: CorpusEntry {
                    clip_path: format!("clips/{lang}/{duration:.3}.wav"),
                    language: ["hi", "ta", "bn"][lang].into(),
                    duration_s: duration,
                    snr_db: snr,
                    speech_ratio: 0.5,
                },
                speech,
            }
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standardize_is_idempotent(rate in prop::sample::select(vec![8000u32, 11_025, 16_000, 22_050, 44_100, 48_000]), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<f32> = (0..rate as usize / 10).map(|_| rng.gen_range(-1.0f32..=1.0)).collect();
        let once = standardize(&AudioClip::mono(samples, rate)).unwrap();
        prop_assert!(once.is_standard());
        prop_assert_eq!(standardize(&once).unwrap(), once);
    }

    #[test]
    fn segments_are_ordered_and_inside_the_clip(seed in any::<u64>(), aggressiveness in 0u8..4, frame_ms in prop::sample::select(vec![10u32, 20, 30])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples = Vec::new();
        for _ in 0..rng.gen_range(1..6) {
            let amp = if rng.gen_bool(0.5) { rng.gen_range(0.0f32..0.002) } else { rng.gen_range(0.05f32..1.0) };
            samples.extend((0..rng.gen_range(800..8000)).map(|_| amp * rng.gen_range(-1.0f32..=1.0)));
        }
        let clip = AudioClip::mono(samples, TARGET_RATE);
        let segs = detect_speech(&clip, &VadConfig::new(frame_ms, aggressiveness, 10).unwrap()).unwrap();
        for s in &segs {
            prop_assert!(s.start_s < s.end_s && s.end_s <= clip.duration_s() + 1e-9);
        }
        for w in segs.windows(2) {
            prop_assert!(w[0].end_s <= w[1].start_s);
        }
    }

    #[test]
    fn higher_aggressiveness_never_finds_more_speech(seed in any::<u64>()) {
        let mut clip = noise_burst(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for x in clip.samples.iter_mut() {
            *x = *x * rng.gen_range(0.0f32..1.0) + rng.gen_range(-0.003f32..0.003);
        }
        let d: Vec<f64> = (0..4)
            .map(|a| speech_duration(&detect_speech(&clip, &VadConfig::new(30, a, 10).unwrap()).unwrap()))
            .collect();
        prop_assert!(d.windows(2).all(|w| w[0] >= w[1]), "{:?}", d);
    }

    #[test]
    fn chunking_respects_thresholds(records in prop::collection::vec(record_strategy(), 0..10)) {
        let cfg = ChunkConfig::default();
        let out = filter_and_chunk(&records, &cfg).unwrap();
        let input_hours: f64 = records.iter().map(|r| r.entry.duration_s).sum::<f64>() / 3600.0;
        prop_assert!(out.manifest.total_hours() <= input_hours + 1e-9);
        for (e, span) in out.manifest.entries.iter().zip(&out.spans) {
            prop_assert!(e.duration_s <= cfg.max_chunk_s + 1e-9);
            prop_assert!(e.snr_db >= cfg.snr_threshold_db);
            prop_assert!((span.end_s - span.start_s - e.duration_s).abs() < 1e-9);
        }
        for (lang, h) in out.manifest.per_language_hours() {
            let sum: f64 = out.manifest.entries.iter().filter(|e| e.language == lang).map(|e| e.duration_s).sum::<f64>() / 3600.0;
            prop_assert!((h - sum).abs() < 1e-6);
        }
        // kept sources tile their clip exactly
        for (i, r) in records.iter().enumerate() {
            let spans: Vec<_> = out.spans.iter().filter(|s| s.source == i).collect();
            if r.entry.snr_db >= cfg.snr_threshold_db {
                prop_assert!((spans.iter().map(|s| s.end_s - s.start_s).sum::<f64>() - r.entry.duration_s).abs() < 1e-6);
            } else {
                prop_assert!(spans.is_empty());
            }
        }
    }

    #[test]
    fn decisions_ignore_language_and_path(records in prop::collection::vec(record_strategy(), 1..8), rot in 0usize..8) {
        let cfg = ChunkConfig::default();
        let mut relabeled = records.clone();
        let n = records.len();
        for (i, r) in relabeled.iter_mut().enumerate() {
            r.entry.language = records[(i + rot) % n].entry.language.clone();
            r.entry.clip_path = format!("other/{i}.flac");
        }
        let a = filter_and_chunk(&records, &cfg).unwrap();
        let b = filter_and_chunk(&relabeled, &cfg).unwrap();
        prop_assert_eq!(a.spans, b.spans);
    }
}
