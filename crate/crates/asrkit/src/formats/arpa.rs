//! ARPA back-off language model text format.

use std::fmt::Write as _;
use std::path::Path;

use asrkit_core::ngram::{Entry, NGramModel};

use super::{read_text, write_file};
use crate::error::{Error, Result};

/// Fixed-point digits for probabilities and back-off weights.
pub const DECIMALS: usize = 7;

fn num(v: f64) -> String {
    // avoid "-0.0000000" for values that round to zero
    let s = format!("{v:.DECIMALS$}");
    if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
        format!("{:.DECIMALS$}", 0.0)
    } else {
        s
    }
}

/// Renders the model with n-grams in id order, so equal models give equal
/// text.
pub fn render(model: &NGramModel) -> String {
    let vocab = model.vocab();
    let mut out = String::from("\\data\\\n");
    for n in 1..=model.order() {
        let _ = writeln!(out, "ngram {n}={}", model.count(n));
    }
    for n in 1..=model.order() {
        let _ = write!(out, "\n\\{n}-grams:\n");
        for (ids, e) in model.entries(n) {
            let words: Vec<&str> = ids.iter().map(|&w| vocab.word(w)).collect();
            let _ = write!(out, "{}\t{}", num(e.log10_prob), words.join(" "));
            if n < model.order() {
                let _ = write!(out, "\t{}", num(e.log10_backoff));
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}

pub fn write(path: &Path, model: &NGramModel) -> Result<()> {
    write_file(path, render(model).as_bytes())
}

pub fn read(path: &Path) -> Result<NGramModel> {
    parse(&read_text(path)?, path)
}

enum Section {
    Preamble,
    Data,
    Grams(usize),
    End,
}

pub fn parse(text: &str, path: &Path) -> Result<NGramModel> {
    let bad = |line: usize, reason: String| Error::MalformedArpa { path: path.to_path_buf(), line, reason };
    let mut declared: Vec<usize> = Vec::new();
    let mut tables: Vec<Vec<(Vec<String>, Entry)>> = Vec::new();
    let mut section = Section::Preamble;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        last_line = n;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "\\data\\" {
            if !matches!(section, Section::Preamble) {
                return Err(bad(n, "repeated \\data\\ header".into()));
            }
            section = Section::Data;
            continue;
        }
        if line == "\\end\\" {
            if matches!(section, Section::Preamble) {
                return Err(bad(n, "\\end\\ before \\data\\".into()));
            }
            section = Section::End;
            continue;
        }
        if let Some(k) = line.strip_prefix('\\').and_then(|l| l.strip_suffix("-grams:")) {
            let k: usize = k.parse().map_err(|_| bad(n, format!("bad section header {line:?}")))?;
            if matches!(section, Section::Preamble | Section::End) {
                return Err(bad(n, format!("section {line:?} outside the model body")));
            }
            if k != tables.len() + 1 || k > declared.len() {
                return Err(bad(n, format!("unexpected section {line:?}")));
            }
            tables.push(Vec::with_capacity(declared[k - 1]));
            section = Section::Grams(k);
            continue;
        }
        match section {
            Section::Preamble => {}
            Section::End => return Err(bad(n, "content after \\end\\".into())),
            Section::Data => {
                let (k, count) = line
                    .strip_prefix("ngram ")
                    .and_then(|r| r.split_once('='))
                    .and_then(|(k, c)| Some((k.trim().parse::<usize>().ok()?, c.trim().parse::<usize>().ok()?)))
                    .ok_or_else(|| bad(n, format!("expected `ngram k=N`, got {line:?}")))?;
                if k != declared.len() + 1 {
                    return Err(bad(n, format!("ngram counts out of order at order {k}")));
                }
                declared.push(count);
            }
            Section::Grams(k) => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != k + 1 && fields.len() != k + 2 {
                    return Err(bad(n, format!("{k}-gram line has {} fields", fields.len())));
                }
                let parse_num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
                let log10_prob =
                    parse_num(fields[0]).ok_or_else(|| bad(n, format!("bad probability {:?}", fields[0])))?;
                let log10_backoff = match fields.get(k + 1) {
                    Some(b) => parse_num(b).ok_or_else(|| bad(n, format!("bad back-off {b:?}")))?,
                    None => 0.0,
                };
                let words = fields[1..=k].iter().map(|w| w.to_string()).collect();
                tables[k - 1].push((words, Entry { log10_prob, log10_backoff }));
            }
        }
    }
    if !matches!(section, Section::End) {
        return Err(bad(last_line, "missing \\end\\".into()));
    }
    if declared.is_empty() {
        return Err(bad(last_line, "no ngram counts declared".into()));
    }
    if tables.len() != declared.len() {
        return Err(bad(last_line, format!("{} sections for {} declared orders", tables.len(), declared.len())));
    }
    for (k, (t, &d)) in tables.iter().zip(&declared).enumerate() {
        if t.len() != d {
            return Err(bad(last_line, format!("{}-grams: declared {d}, found {}", k + 1, t.len())));
        }
    }
    Ok(NGramModel::from_string_entries(declared.len(), tables)?)
}
