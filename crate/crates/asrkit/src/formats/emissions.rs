//! Binary emissions: magic `EMIS1`, little-endian u32 frames, u32 classes,
//! u32 blank index, f32 frame duration, then frames x classes f32
//! log-probabilities row-major. Class names live in a sidecar `vocab.txt`,
//! one token per line in class order.

use std::fs;
use std::path::{Path, PathBuf};

use asrkit_core::ctc::Emissions;

use super::{list_files, read_text, write_file};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"EMIS1";
pub const EXTENSION: &str = "emis";
pub const VOCAB_FILE: &str = "vocab.txt";
const HEADER_LEN: usize = 5 + 4 * 4;

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

/// Reads a vocabulary file: one token per line, empty lines kept out.
pub fn read_vocab(path: &Path) -> Result<Vec<String>> {
    let text = read_text(path)?;
    let vocab: Vec<String> =
        text.lines().map(|l| l.trim_end_matches('\r').to_string()).filter(|l| !l.is_empty()).collect();
    if vocab.is_empty() {
        return Err(Error::format(path, 1, "empty vocabulary"));
    }
    Ok(vocab)
}

pub fn decode_bytes(bytes: &[u8], vocab: Vec<String>, path: &Path) -> Result<Emissions> {
    let bad = |reason: String| Error::Dump { path: path.to_path_buf(), reason };
    if bytes.len() < HEADER_LEN || &bytes[..5] != MAGIC {
        return Err(bad("not an EMIS1 file".into()));
    }
    let frames = u32_at(bytes, 5) as usize;
    let classes = u32_at(bytes, 9) as usize;
    let blank = u32_at(bytes, 13) as usize;
    let frame_duration = f32::from_le_bytes(bytes[17..21].try_into().expect("4 bytes"));
    let body = &bytes[HEADER_LEN..];
    if body.len() != frames * classes * 4 {
        return Err(bad(format!(
            "expected {} data bytes for {frames}x{classes}, got {}",
            frames * classes * 4,
            body.len()
        )));
    }
    let data = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64).collect();
    Emissions::new(frames, classes, data, vocab, blank, frame_duration as f64)
        .map_err(|source| Error::Emissions { path: path.to_path_buf(), source })
}

pub fn encode(e: &Emissions) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + e.data().len() * 4);
    out.extend_from_slice(MAGIC);
    for v in [e.frames() as u32, e.classes() as u32, e.blank() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(e.frame_duration_s() as f32).to_le_bytes());
    for &v in e.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn read(path: &Path, vocab: Vec<String>) -> Result<Emissions> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bytes(&bytes, vocab, path)
}

pub fn write(path: &Path, e: &Emissions) -> Result<()> {
    write_file(path, &encode(e))
}

/// `(utt_id, path)` pairs and the shared vocabulary of a directory.
pub type Listing = (Vec<(String, PathBuf)>, Vec<String>);

/// Utterance ids and paths of every `.emis` file in `dir`, with the
/// directory's shared vocabulary.
pub fn list_dir(dir: &Path) -> Result<Listing> {
    let vocab = read_vocab(&dir.join(VOCAB_FILE))?;
    let files = list_files(dir, EXTENSION)?
        .into_iter()
        .map(|p| (p.file_stem().unwrap_or_default().to_string_lossy().into_owned(), p))
        .collect();
    Ok((files, vocab))
}

/// Loads every utterance of `dir`, sorted by id.
pub fn read_dir(dir: &Path) -> Result<Vec<(String, Emissions)>> {
    let (files, vocab) = list_dir(dir)?;
    files.into_iter().map(|(id, p)| Ok((id, read(&p, vocab.clone())?))).collect()
}
