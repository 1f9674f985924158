//! Transliteration between Indic scripts and Devanagari.
//!
//! The Unicode blocks for the Brahmi-derived Indic scripts share one layout,
//! so most characters map by offset: `cp - block_start + 0x0900`. A
//! character whose aligned Devanagari slot holds a character of a different
//! class (a letter landing on a mark, a currency sign landing on a letter)
//! is instead mapped to a private-use codepoint listed in the exception
//! table, which keeps the mapping a bijection.

use alloc::collections::BTreeMap;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

/// Exception table bundled with the crate: `script<TAB>source<TAB>mapped<TAB>name`.
pub const DEFAULT_EXCEPTIONS: &str = include_str!("../resources/script_exceptions.tsv");

const DEVANAGARI_START: u32 = 0x0900;
const BLOCK_LEN: u32 = 0x80;
const INDIC_RANGE: core::ops::Range<u32> = 0x0900..0x0D80;
const DANDA: char = '\u{0964}';
const DOUBLE_DANDA: char = '\u{0965}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Script {
    Devanagari,
    Bengali,
    Gurmukhi,
    Gujarati,
    Oriya,
    Tamil,
    Telugu,
    Kannada,
    Malayalam,
}

impl Script {
    pub const ALL: [Script; 9] = [
        Script::Devanagari,
        Script::Bengali,
        Script::Gurmukhi,
        Script::Gujarati,
        Script::Oriya,
        Script::Tamil,
        Script::Telugu,
        Script::Kannada,
        Script::Malayalam,
    ];

    pub fn block_start(self) -> u32 {
        match self {
            Script::Devanagari => 0x0900,
            Script::Bengali => 0x0980,
            Script::Gurmukhi => 0x0A00,
            Script::Gujarati => 0x0A80,
            Script::Oriya => 0x0B00,
            Script::Tamil => 0x0B80,
            Script::Telugu => 0x0C00,
            Script::Kannada => 0x0C80,
            Script::Malayalam => 0x0D00,
        }
    }

    /// Bit `i` set when `block_start + i` is assigned (Unicode 13).
    fn assigned_mask(self) -> u128 {
        match self {
            Script::Devanagari => u128::MAX,
            Script::Bengali => 0x7fff_ffcf_b080_799f_f3c5_fdff_fff9_9fef,
            Script::Gurmukhi => 0x007f_ffc0_5e02_3987_d36d_fdff_fff9_87ee,
            Script::Gujarati => 0xfe03_ffcf_0001_3bbf_f3ed_fdff_fffb_bfee,
            Script::Oriya => 0x00ff_ffcf_b0e0_399f_f3ed_fdff_fff9_9fee,
            Script::Tamil => 0x07ff_ffc0_0081_3dc7_c3ff_c718_d63d_c7ec,
            Script::Telugu => 0xff80_ffcf_0760_3ddf_e3ff_fdff_fffd_dfff,
            Script::Kannada => 0x0006_ffcf_4060_3ddf_f3ef_fdff_fffd_dfff,
            Script::Malayalam => 0xffff_ffcf_fff0_fddf_ffff_ffff_fffd_dfff,
        }
    }

    /// Short tag used in tables and on the command line.
    pub fn code(self) -> &'static str {
        match self {
            Script::Devanagari => "dev",
            Script::Bengali => "bn",
            Script::Gurmukhi => "pa",
            Script::Gujarati => "gu",
            Script::Oriya => "or",
            Script::Tamil => "ta",
            Script::Telugu => "te",
            Script::Kannada => "kn",
            Script::Malayalam => "ml",
        }
    }

    fn contains(self, c: char) -> bool {
        let cp = c as u32;
        cp >= self.block_start() && cp < self.block_start() + BLOCK_LEN
    }

    /// Whether the block slot at `offset` holds an assigned character.
    pub fn is_assigned(self, offset: u32) -> bool {
        offset < BLOCK_LEN && self.assigned_mask() >> offset & 1 == 1
    }

    /// Every assigned codepoint of this script's block.
    pub fn assigned_chars(self) -> impl Iterator<Item = char> {
        (0..BLOCK_LEN).filter(move |&o| self.is_assigned(o)).filter_map(move |o| char::from_u32(self.block_start() + o))
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Script {
    type Err = ScriptError;

    /// Accepts script codes, language codes written in the script, and
    /// English script names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let script = match lower.as_str() {
            "dev" | "deva" | "devanagari" | "hi" | "mr" | "ne" | "sa" | "mai" | "kok" | "doi" => Script::Devanagari,
            "bn" | "as" | "beng" | "bengali" | "assamese" => Script::Bengali,
            "pa" | "guru" | "gurmukhi" | "punjabi" => Script::Gurmukhi,
            "gu" | "gujr" | "gujarati" => Script::Gujarati,
            "or" | "od" | "orya" | "oriya" | "odia" => Script::Oriya,
            "ta" | "taml" | "tamil" => Script::Tamil,
            "te" | "telu" | "telugu" => Script::Telugu,
            "kn" | "knda" | "kannada" => Script::Kannada,
            "ml" | "mlym" | "malayalam" => Script::Malayalam,
            _ => return Err(ScriptError::UnsupportedScript(String::from(s))),
        };
        Ok(script)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("unsupported script {0:?}")]
    UnsupportedScript(String),
    #[error("cannot map U+{:04X} at position {position} for script {script}", *.codepoint as u32)]
    UnmappableCharacter { codepoint: char, position: usize, script: Script },
    #[error("exception table line {line}: {reason}")]
    MalformedTable { line: usize, reason: &'static str },
}

/// What to do with a character that has no counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Unmappable {
    #[default]
    Fail,
    Skip,
}

/// Offset mapping plus the exception table.
#[derive(Debug, Clone)]
pub struct ScriptMap {
    to_dev: BTreeMap<(Script, char), char>,
    from_dev: BTreeMap<(Script, char), char>,
}

impl Default for ScriptMap {
    fn default() -> Self {
        Self::from_exception_table(DEFAULT_EXCEPTIONS).expect("bundled exception table is well formed")
    }
}

fn parse_cp(field: &str) -> Option<char> {
    let hex = field.trim().trim_start_matches("U+").trim_start_matches("u+");
    u32::from_str_radix(hex, 16).ok().and_then(char::from_u32)
}

impl ScriptMap {
    /// Parses an exception table. Lines starting with `#` are comments.
    pub fn from_exception_table(table: &str) -> Result<Self, ScriptError> {
        let mut to_dev = BTreeMap::new();
        let mut from_dev = BTreeMap::new();
        for (i, raw) in table.lines().enumerate() {
            let line = i + 1;
            let text = raw.trim_end_matches('\r');
            if text.trim().is_empty() || text.starts_with('#') {
                continue;
            }
            let mut fields = text.split('\t');
            let (Some(script), Some(src), Some(dst)) = (fields.next(), fields.next(), fields.next()) else {
                return Err(ScriptError::MalformedTable { line, reason: "expected at least 3 fields" });
            };
            let script: Script =
                script.parse().map_err(|_| ScriptError::MalformedTable { line, reason: "unknown script" })?;
            let src = parse_cp(src).ok_or(ScriptError::MalformedTable { line, reason: "bad source codepoint" })?;
            let dst = parse_cp(dst).ok_or(ScriptError::MalformedTable { line, reason: "bad mapped codepoint" })?;
            if !script.contains(src) {
                return Err(ScriptError::MalformedTable { line, reason: "source outside script block" });
            }
            if INDIC_RANGE.contains(&(dst as u32)) {
                return Err(ScriptError::MalformedTable { line, reason: "mapped codepoint inside an Indic block" });
            }
            if to_dev.insert((script, src), dst).is_some() || from_dev.insert((script, dst), src).is_some() {
                return Err(ScriptError::MalformedTable { line, reason: "duplicate mapping" });
            }
        }
        Ok(Self { to_dev, from_dev })
    }

    /// Number of exception entries.
    pub fn exception_count(&self) -> usize {
        self.to_dev.len()
    }

    fn is_exception_source(&self, script: Script, c: char) -> bool {
        self.to_dev.contains_key(&(script, c))
    }

    /// Maps one character of `source` script to Devanagari. `Ok(None)` means
    /// the character is unmappable.
    fn char_to_dev(&self, c: char, source: Script) -> Option<char> {
        if source == Script::Devanagari || c == DANDA || c == DOUBLE_DANDA {
            return Some(c);
        }
        let cp = c as u32;
        if source.contains(c) {
            let offset = cp - source.block_start();
            if !source.is_assigned(offset) {
                return None;
            }
            if let Some(&m) = self.to_dev.get(&(source, c)) {
                return Some(m);
            }
            return char::from_u32(DEVANAGARI_START + offset);
        }
        if INDIC_RANGE.contains(&cp) {
            return None;
        }
        Some(c)
    }

    fn char_from_dev(&self, c: char, target: Script) -> Option<char> {
        if target == Script::Devanagari || c == DANDA || c == DOUBLE_DANDA {
            return Some(c);
        }
        let cp = c as u32;
        if Script::Devanagari.contains(c) {
            let offset = cp - DEVANAGARI_START;
            let slot = char::from_u32(target.block_start() + offset)?;
            if !target.is_assigned(offset) || self.is_exception_source(target, slot) {
                return None;
            }
            return Some(slot);
        }
        if let Some(&orig) = self.from_dev.get(&(target, c)) {
            return Some(orig);
        }
        if INDIC_RANGE.contains(&cp) {
            return None;
        }
        Some(c)
    }

    fn convert(
        &self,
        text: &str,
        script: Script,
        policy: Unmappable,
        f: impl Fn(&Self, char, Script) -> Option<char>,
    ) -> Result<String, ScriptError> {
        let mut out = String::with_capacity(text.len());
        for (position, c) in text.chars().enumerate() {
            match f(self, c, script) {
                Some(m) => out.push(m),
                None => match policy {
                    Unmappable::Skip => {}
                    Unmappable::Fail => {
                        return Err(ScriptError::UnmappableCharacter { codepoint: c, position, script })
                    }
                },
            }
        }
        Ok(out)
    }

    /// Rewrites text in `source` script into Devanagari. Characters outside
    /// the Indic blocks pass through unchanged.
    pub fn to_devanagari(&self, text: &str, source: Script, policy: Unmappable) -> Result<String, ScriptError> {
        self.convert(text, source, policy, Self::char_to_dev)
    }

    /// Inverse of [`ScriptMap::to_devanagari`].
    pub fn from_devanagari(&self, text: &str, target: Script, policy: Unmappable) -> Result<String, ScriptError> {
        self.convert(text, target, policy, Self::char_from_dev)
    }

    /// Converts between any two supported scripts through Devanagari.
    pub fn transliterate(
        &self,
        text: &str,
        from: Script,
        to: Script,
        policy: Unmappable,
    ) -> Result<String, ScriptError> {
        let dev = self.to_devanagari(text, from, policy)?;
        self.from_devanagari(&dev, to, policy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn devanagari_is_identity() {
        let m = ScriptMap::default();
        let s = "नमस्ते दुनिया 123";
        assert_eq!(m.to_devanagari(s, Script::Devanagari, Unmappable::Fail).unwrap(), s);
    }

    #[test]
    fn bengali_ka_to_devanagari_ka() {
        let m = ScriptMap::default();
        assert_eq!(m.to_devanagari("\u{0995}", Script::Bengali, Unmappable::Fail).unwrap(), "\u{0915}");
    }

    #[test]
    fn devanagari_ka_to_telugu_ka() {
        let m = ScriptMap::default();
        assert_eq!(m.from_devanagari("\u{0915}", Script::Telugu, Unmappable::Fail).unwrap(), "\u{0C15}");
    }

    #[test]
    fn empty_and_passthrough() {
        let m = ScriptMap::default();
        assert_eq!(m.from_devanagari("", Script::Tamil, Unmappable::Fail).unwrap(), "");
        assert_eq!(m.from_devanagari("क12", Script::Gujarati, Unmappable::Fail).unwrap(), "ક12");
        assert_eq!(m.to_devanagari("ক, abc।", Script::Bengali, Unmappable::Fail).unwrap(), "क, abc।");
    }

    #[test]
    fn tamil_only_signs_use_private_use_slots() {
        let m = ScriptMap::default();
        let out = m.to_devanagari("\u{0BF3}", Script::Tamil, Unmappable::Fail).unwrap();
        let c = out.chars().next().unwrap() as u32;
        assert!((0xE000..0xF900).contains(&c));
        assert_eq!(m.from_devanagari(&out, Script::Tamil, Unmappable::Fail).unwrap(), "\u{0BF3}");
    }

    #[test]
    fn unmappable_reports_position() {
        let m = ScriptMap::default();
        // Devanagari KHA has no Tamil slot.
        let err = m.from_devanagari("कख", Script::Tamil, Unmappable::Fail).unwrap_err();
        assert_eq!(err, ScriptError::UnmappableCharacter { codepoint: '\u{0916}', position: 1, script: Script::Tamil });
        assert_eq!(m.from_devanagari("कख", Script::Tamil, Unmappable::Skip).unwrap(), "க");
    }

    #[test]
    fn unassigned_source_codepoint_is_unmappable() {
        let m = ScriptMap::default();
        assert!(m.to_devanagari("\u{0984}", Script::Bengali, Unmappable::Fail).is_err());
    }

    #[test]
    fn full_block_round_trip() {
        let m = ScriptMap::default();
        for script in Script::ALL {
            let s: String = script.assigned_chars().collect();
            let dev = m.to_devanagari(&s, script, Unmappable::Fail).unwrap();
            let back = m.from_devanagari(&dev, script, Unmappable::Fail).unwrap();
            assert_eq!(back, s, "{script}");
        }
    }

    #[test]
    fn mapped_output_is_devanagari_or_private_use() {
        let m = ScriptMap::default();
        for script in Script::ALL {
            let s: String = script.assigned_chars().collect();
            let dev = m.to_devanagari(&s, script, Unmappable::Fail).unwrap();
            for c in dev.chars() {
                let cp = c as u32;
                assert!(Script::Devanagari.contains(c) || (0xE000..0xF900).contains(&cp));
            }
        }
    }

    #[test]
    fn script_names_parse() {
        assert_eq!("bn".parse::<Script>().unwrap(), Script::Bengali);
        assert_eq!("Odia".parse::<Script>().unwrap(), Script::Oriya);
        assert_eq!("hi".parse::<Script>().unwrap(), Script::Devanagari);
        assert!("ur".parse::<Script>().is_err());
    }

    #[test]
    fn malformed_table_rejected() {
        assert!(matches!(
            ScriptMap::from_exception_table("ta\t0BF3"),
            Err(ScriptError::MalformedTable { line: 1, .. })
        ));
        assert!(matches!(ScriptMap::from_exception_table("ta\t0995\tE000"), Err(ScriptError::MalformedTable { .. })));
        let ok = ScriptMap::from_exception_table("# c\nta\t0BF3\tE273\n").unwrap();
        assert_eq!(ok.exception_count(), 1);
    }
}
