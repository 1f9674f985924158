//! Corpus manifest: `path<TAB>language<TAB>duration_s<TAB>snr_db<TAB>speech_ratio`.

use std::fmt::Write as _;
use std::path::Path;

use asrkit_core::corpus::{CorpusEntry, CorpusManifest};

use super::{lines, read_text, write_file};
use crate::error::{Error, Result};

pub fn parse(text: &str, path: &Path) -> Result<CorpusManifest> {
    let mut entries = Vec::new();
    for (n, line) in lines(text) {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(Error::format(path, n, format!("expected 5 fields, got {}", f.len())));
        }
        let num = |i: usize, name: &str| -> Result<f64> {
            f[i].trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::format(path, n, format!("bad {name} {:?}", f[i])))
        };
        entries.push(CorpusEntry {
            clip_path: f[0].to_string(),
            language: f[1].to_string(),
            duration_s: num(2, "duration")?,
            snr_db: num(3, "snr")?,
            speech_ratio: num(4, "speech ratio")?,
        });
    }
    Ok(CorpusManifest::new(entries))
}

/// Three decimals, without a sign on values that round to zero.
fn fixed3(x: f64) -> String {
    let s = format!("{x:.3}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

pub fn render(m: &CorpusManifest) -> String {
    let mut out = String::new();
    for e in &m.entries {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            e.clip_path,
            e.language,
            fixed3(e.duration_s),
            fixed3(e.snr_db),
            fixed3(e.speech_ratio)
        );
    }
    out
}

pub fn read(path: &Path) -> Result<CorpusManifest> {
    parse(&read_text(path)?, path)
}

pub fn write(path: &Path, m: &CorpusManifest) -> Result<()> {
    write_file(path, render(m).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_zero_is_unsigned() {
        assert_eq!(fixed3(-0.0), "0.000");
        assert_eq!(fixed3(-0.0001), "0.000");
        assert_eq!(fixed3(-0.5), "-0.500");
    }

    #[test]
    fn round_trip_at_three_decimals() {
        let text = "hi/a_000.wav\thi\t24.000\t17.250\t0.912\nta/b.wav\tta\t3.141\t-2.000\t0.000\n";
        let m = parse(text, Path::new("m.tsv")).unwrap();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(render(&m), text);
    }

    #[test]
    fn wrong_field_count_names_the_line() {
        let err = parse("a\thi\t1\t2\t3\nb\thi\t1\n", Path::new("m.tsv")).unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }));
    }
}
