//! Tab-separated tables: transcripts, n-best lists, external LM scores and
//! lexicons.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use asrkit_core::tuning::{ElmScores, NBestEntry};

use super::{lines, read_text, write_file};
use crate::error::{Error, Result};

/// `utt_id<TAB>text`. A line with only an id is an empty transcript.
pub fn parse_transcripts(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in lines(text) {
        let (id, t) = line.split_once('\t').unwrap_or((line, ""));
        let id = id.trim();
        if out.insert(id.to_string(), t.split_whitespace().collect::<Vec<_>>().join(" ")).is_some() {
            return Err(Error::format(path, n, format!("duplicate utterance {id:?}")));
        }
    }
    Ok(out)
}

pub fn render_transcripts(t: &BTreeMap<String, String>) -> String {
    t.iter().fold(String::new(), |mut out, (id, text)| {
        let _ = writeln!(out, "{id}\t{text}");
        out
    })
}

/// `utt_id<TAB>rank<TAB>am_score<TAB>lm_score<TAB>word_count<TAB>text`.
/// Scores use the shortest decimal that reads back to the same value.
pub fn render_nbest(entries: &[NBestEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ =
            writeln!(out, "{}\t{}\t{:?}\t{:?}\t{}\t{}", e.utt_id, e.rank, e.am_score, e.lm_score, e.word_count, e.text);
    }
    out
}

pub fn parse_nbest(text: &str, path: &Path) -> Result<Vec<NBestEntry>> {
    let mut out = Vec::new();
    for (n, line) in lines(text) {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(Error::format(path, n, format!("expected 6 fields, got {}", f.len())));
        }
        let bad = |what: &str| Error::format(path, n, format!("bad {what}"));
        let e = NBestEntry {
            utt_id: f[0].to_string(),
            rank: f[1].parse().map_err(|_| bad("rank"))?,
            am_score: f[2].parse().map_err(|_| bad("am_score"))?,
            lm_score: f[3].parse().map_err(|_| bad("lm_score"))?,
            word_count: f[4].parse().map_err(|_| bad("word_count"))?,
            text: f[5].to_string(),
        };
        if e.word_count != e.text.split_whitespace().count() {
            return Err(Error::format(path, n, "word_count does not match text"));
        }
        out.push(e);
    }
    Ok(out)
}

/// Top entry per utterance: either a transcript table or an n-best list.
pub fn parse_hypotheses(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let six = lines(text).next().is_some_and(|(_, l)| l.split('\t').count() == 6);
    if !six {
        return parse_transcripts(text, path);
    }
    let mut best: BTreeMap<String, (u32, String)> = BTreeMap::new();
    for e in parse_nbest(text, path)? {
        let slot = best.entry(e.utt_id).or_insert((u32::MAX, String::new()));
        if e.rank < slot.0 {
            *slot = (e.rank, e.text);
        }
    }
    Ok(best.into_iter().map(|(id, (_, t))| (id, t)).collect())
}

/// `utt_id<TAB>rank<TAB>log_prob` (natural log).
pub fn parse_elm(text: &str, path: &Path) -> Result<ElmScores> {
    let mut out = ElmScores::new();
    for (n, line) in lines(text) {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(Error::format(path, n, format!("expected 3 fields, got {}", f.len())));
        }
        let rank: u32 = f[1].parse().map_err(|_| Error::format(path, n, "bad rank"))?;
        let lp: f64 =
            f[2].parse().ok().filter(|v: &f64| !v.is_nan()).ok_or_else(|| Error::format(path, n, "bad log_prob"))?;
        if out.insert((f[0].to_string(), rank), lp).is_some() {
            return Err(Error::format(path, n, "duplicate entry"));
        }
    }
    Ok(out)
}

/// `word<TAB>c1 c2 ... cn`.
pub fn parse_lexicon(text: &str, path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let mut out = Vec::new();
    for (n, line) in lines(text) {
        let (w, s) = line.split_once('\t').ok_or_else(|| Error::format(path, n, "expected word<TAB>spelling"))?;
        out.push((w.to_string(), s.split_whitespace().map(String::from).collect()));
    }
    Ok(out)
}

pub fn render_lexicon<'a>(entries: impl IntoIterator<Item = (&'a str, Vec<&'a str>)>) -> String {
    entries.into_iter().fold(String::new(), |mut out, (w, s)| {
        let _ = writeln!(out, "{w}\t{}", s.join(" "));
        out
    })
}

pub fn read_transcripts(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_transcripts(&read_text(path)?, path)
}

pub fn read_hypotheses(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_hypotheses(&read_text(path)?, path)
}

pub fn read_nbest(path: &Path) -> Result<Vec<NBestEntry>> {
    parse_nbest(&read_text(path)?, path)
}

pub fn read_elm(path: &Path) -> Result<ElmScores> {
    parse_elm(&read_text(path)?, path)
}

pub fn read_lexicon(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    parse_lexicon(&read_text(path)?, path)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, text.as_bytes())
}
