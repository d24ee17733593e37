//! Source-file encoding detection.
//!
//! Per file: a byte-order mark decides outright; otherwise valid UTF-8 wins,
//! then a UTF-16 NUL-pattern check, then the single-byte code pages. A
//! project gets one encoding: UTF-8 files agree with anything, and more than
//! one distinct non-UTF-8 answer is an error.

use std::collections::BTreeSet;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Encoding {
    Utf8,
    Utf16Le,
    Utf16Be,
    Windows1252,
    Iso8859_1,
}

impl Encoding {
    pub const ALL: [Encoding; 5] = [
        Encoding::Utf8,
        Encoding::Utf16Le,
        Encoding::Utf16Be,
        Encoding::Windows1252,
        Encoding::Iso8859_1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Encoding::Utf8 => "utf-8",
            Encoding::Utf16Le => "utf-16le",
            Encoding::Utf16Be => "utf-16be",
            Encoding::Windows1252 => "windows-1252",
            Encoding::Iso8859_1 => "iso-8859-1",
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Encoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        match norm.as_str() {
            "utf-8" | "utf8" => Ok(Encoding::Utf8),
            "utf-16le" => Ok(Encoding::Utf16Le),
            "utf-16be" => Ok(Encoding::Utf16Be),
            "windows-1252" | "cp1252" => Ok(Encoding::Windows1252),
            "iso-8859-1" | "latin1" | "iso8859-1" => Ok(Encoding::Iso8859_1),
            _ => Err(format!("unsupported encoding `{s}`")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EncodingError {
    #[error("no source files to analyse")]
    NoFiles,
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("Too many encoding types detected: {}", list(.0))]
    TooManyEncodings(Vec<Encoding>),
}

fn list(encs: &[Encoding]) -> String {
    encs.iter().map(|e| e.as_str()).collect::<Vec<_>>().join(", ")
}

/// Bytes 0x80..=0x9F left undefined by windows-1252.
const CP1252_UNDEFINED: [u8; 5] = [0x81, 0x8D, 0x8F, 0x90, 0x9D];

pub fn detect_bytes(bytes: &[u8]) -> Encoding {
    if bytes.starts_with(&[0xEF, 0xBB, 0xBF]) {
        return Encoding::Utf8;
    }
    if bytes.starts_with(&[0xFF, 0xFE]) {
        return Encoding::Utf16Le;
    }
    if bytes.starts_with(&[0xFE, 0xFF]) {
        return Encoding::Utf16Be;
    }
    if let Some(enc) = utf16_by_nul_pattern(bytes) {
        return enc;
    }
    if std::str::from_utf8(bytes).is_ok() {
        return Encoding::Utf8;
    }
    if bytes.iter().any(|b| CP1252_UNDEFINED.contains(b)) {
        Encoding::Iso8859_1
    } else {
        Encoding::Windows1252
    }
}

/// Source text is mostly ASCII, so BOM-less UTF-16 shows NULs in every
/// other byte.
fn utf16_by_nul_pattern(bytes: &[u8]) -> Option<Encoding> {
    if bytes.len() < 4 || !bytes.len().is_multiple_of(2) {
        return None;
    }
    let pairs = bytes.len() / 2;
    let (mut even, mut odd) = (0usize, 0usize);
    for pair in bytes.chunks_exact(2) {
        even += usize::from(pair[0] == 0);
        odd += usize::from(pair[1] == 0);
    }
    // at least 60% of code units look like ASCII, and the other lane is NUL-free
    let threshold = pairs * 3 / 5;
    if odd > threshold.max(1) && even == 0 {
        Some(Encoding::Utf16Le)
    } else if even > threshold.max(1) && odd == 0 {
        Some(Encoding::Utf16Be)
    } else {
        None
    }
}

pub fn detect_file(path: &Path) -> Result<Encoding, EncodingError> {
    let bytes = std::fs::read(path).map_err(|source| EncodingError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(detect_bytes(&bytes))
}

/// Combines per-file answers into one project encoding.
pub fn combine(per_file: impl IntoIterator<Item = Encoding>) -> Result<Encoding, EncodingError> {
    let others: BTreeSet<Encoding> = per_file.into_iter().filter(|e| *e != Encoding::Utf8).collect();
    match others.len() {
        0 => Ok(Encoding::Utf8),
        1 => Ok(*others.first().expect("one element")),
        _ => Err(EncodingError::TooManyEncodings(others.into_iter().collect())),
    }
}

pub fn detect_encoding<P: AsRef<Path>>(files: &[P]) -> Result<Encoding, EncodingError> {
    if files.is_empty() {
        return Err(EncodingError::NoFiles);
    }
    let per_file = files
        .iter()
        .map(|p| detect_file(p.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    combine(per_file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utf16le(s: &str, bom: bool) -> Vec<u8> {
        let mut out = if bom { vec![0xFF, 0xFE] } else { vec![] };
        out.extend(s.encode_utf16().flat_map(|u| u.to_le_bytes()));
        out
    }

    #[test]
    fn per_file_detection() {
        assert_eq!(detect_bytes(b"class A {}"), Encoding::Utf8);
        assert_eq!(detect_bytes("// caf\u{e9}".as_bytes()), Encoding::Utf8);
        assert_eq!(detect_bytes(b"\xEF\xBB\xBFclass A {}"), Encoding::Utf8);
        assert_eq!(detect_bytes(&utf16le("class A {}", true)), Encoding::Utf16Le);
        assert_eq!(detect_bytes(&utf16le("class A {}", false)), Encoding::Utf16Le);
        assert_eq!(detect_bytes(b"\xFE\xFF\x00c"), Encoding::Utf16Be);
        // "café" and smart quotes in windows-1252
        assert_eq!(detect_bytes(b"// caf\xE9 \x93quoted\x94\nclass A {}"), Encoding::Windows1252);
        assert_eq!(detect_bytes(b"// \x81 control\nclass A {}"), Encoding::Iso8859_1);
        assert_eq!(detect_bytes(b""), Encoding::Utf8);
    }

    #[test]
    fn combining() {
        use Encoding::*;
        assert_eq!(combine([Utf8, Utf8]).unwrap(), Utf8);
        assert_eq!(combine([Utf8, Windows1252, Windows1252]).unwrap(), Windows1252);
        match combine([Utf16Le, Windows1252, Utf8]) {
            Err(EncodingError::TooManyEncodings(e)) => assert_eq!(e, [Utf16Le, Windows1252]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn names_round_trip() {
        for e in Encoding::ALL {
            assert_eq!(e.as_str().parse::<Encoding>().unwrap(), e);
        }
        assert_eq!("UTF8".parse::<Encoding>().unwrap(), Encoding::Utf8);
        assert!("ebcdic".parse::<Encoding>().is_err());
    }

    #[test]
    fn too_many_message_matches_taxonomy() {
        let err = EncodingError::TooManyEncodings(vec![Encoding::Utf16Le, Encoding::Windows1252]);
        assert_eq!(err.to_string(), "Too many encoding types detected: utf-16le, windows-1252");
    }
}
