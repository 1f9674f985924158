//! Analysis dumps. All integers and floats are little-endian.
//!
//! * `CODE1`: u32 frames, then frames x 2 u16 codebook indices.
//! * `FRAM1`: u32 frames, u32 dim, then frames x dim f32 row-major.
//! * `ATTN1`: u32 frames, frames x frames f32 row-major, then frames u32
//!   span ids.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const CODE_MAGIC: &[u8; 5] = b"CODE1";
pub const FRAME_MAGIC: &[u8; 5] = b"FRAM1";
pub const ATTN_MAGIC: &[u8; 5] = b"ATTN1";

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn open(bytes: &'a [u8], magic: &[u8; 5], path: &'a Path) -> Result<Self> {
        if bytes.len() < 5 || &bytes[..5] != magic {
            return Err(Error::Dump {
                path: path.to_path_buf(),
                reason: format!("missing {} magic", String::from_utf8_lossy(magic)),
            });
        }
        Ok(Self { bytes, at: 5, path })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| Error::Dump {
            path: self.path.to_path_buf(),
            reason: format!("truncated at byte {}", self.at),
        })?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u16s(&mut self, n: usize) -> Result<Vec<u16>> {
        Ok(self.take(n * 2)?.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect())
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<u32>> {
        Ok(self.take(n * 4)?.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        Ok(self
            .take(n * 4)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect())
    }

    fn finish(self) -> Result<()> {
        if self.at != self.bytes.len() {
            return Err(Error::Dump {
                path: self.path.to_path_buf(),
                reason: format!("{} trailing bytes", self.bytes.len() - self.at),
            });
        }
        Ok(())
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn parse_codes(bytes: &[u8], path: &Path) -> Result<Vec<(u16, u16)>> {
    let mut c = Cursor::open(bytes, CODE_MAGIC, path)?;
    let frames = c.u32()? as usize;
    let flat = c.u16s(frames * 2)?;
    c.finish()?;
    Ok(flat.chunks_exact(2).map(|p| (p[0], p[1])).collect())
}

/// `(frames, dim, data)`.
pub fn parse_frames(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let mut c = Cursor::open(bytes, FRAME_MAGIC, path)?;
    let frames = c.u32()? as usize;
    let dim = c.u32()? as usize;
    let data = c.f32s(frames * dim)?;
    c.finish()?;
    Ok((frames, dim, data))
}

/// `(frames, weights, spans)`.
pub fn parse_attention(bytes: &[u8], path: &Path) -> Result<(usize, Vec<f64>, Vec<u32>)> {
    let mut c = Cursor::open(bytes, ATTN_MAGIC, path)?;
    let frames = c.u32()? as usize;
    let weights = c.f32s(frames * frames)?;
    let spans = c.u32s(frames)?;
    c.finish()?;
    Ok((frames, weights, spans))
}

pub fn read_codes(path: &Path) -> Result<Vec<(u16, u16)>> {
    parse_codes(&read_bytes(path)?, path)
}

pub fn read_frames(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    parse_frames(&read_bytes(path)?, path)
}

pub fn read_attention(path: &Path) -> Result<(usize, Vec<f64>, Vec<u32>)> {
    parse_attention(&read_bytes(path)?, path)
}

pub fn encode_codes(codes: &[(u16, u16)]) -> Vec<u8> {
    let mut out = CODE_MAGIC.to_vec();
    out.extend_from_slice(&(codes.len() as u32).to_le_bytes());
    for &(a, b) in codes {
        out.extend_from_slice(&a.to_le_bytes());
        out.extend_from_slice(&b.to_le_bytes());
    }
    out
}

pub fn encode_frames(frames: usize, dim: usize, data: &[f32]) -> Vec<u8> {
    let mut out = FRAME_MAGIC.to_vec();
    out.extend_from_slice(&(frames as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    data.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    out
}

pub fn encode_attention(frames: usize, weights: &[f32], spans: &[u32]) -> Vec<u8> {
    let mut out = ATTN_MAGIC.to_vec();
    out.extend_from_slice(&(frames as u32).to_le_bytes());
    weights.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    spans.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    out
}
