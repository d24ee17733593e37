//! Signature-file digest verification for JAR archives.
//!
//! Only the digests recorded in `META-INF/*.SF` are checked against the
//! archive manifest. Certificates and the PKCS#7 signature block are not
//! examined: an archive is rejected only when a signature file digest for
//! the manifest (whole, main attributes, or a per-entry section) does not
//! match.

use std::io::{Cursor, Read};
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use sha1::Sha1;
use sha2::{Digest, Sha256, Sha384, Sha512};

use super::SignatureStatus;

pub(crate) const MANIFEST_PATH: &str = "META-INF/MANIFEST.MF";

/// Checks the archive at `path`.
pub fn verify_signature(path: &Path) -> SignatureStatus {
    match std::fs::read(path) {
        Ok(bytes) => verify_signature_bytes(&bytes),
        Err(_) => SignatureStatus::Unreadable,
    }
}

pub fn verify_signature_bytes(bytes: &[u8]) -> SignatureStatus {
    let Ok(mut archive) = zip::ZipArchive::new(Cursor::new(bytes)) else {
        return SignatureStatus::Unreadable;
    };

    let mut manifest_name = None;
    let mut sig_files = Vec::new();
    for name in archive.file_names() {
        let upper = name.to_ascii_uppercase();
        if upper == MANIFEST_PATH {
            manifest_name = Some(name.to_owned());
        } else if let Some(rest) = upper.strip_prefix("META-INF/") {
            if !rest.contains('/') && rest.ends_with(".SF") {
                sig_files.push(name.to_owned());
            }
        }
    }
    if sig_files.is_empty() {
        return SignatureStatus::Ok;
    }
    sig_files.sort();

    let Some(manifest_name) = manifest_name else {
        return SignatureStatus::InvalidDigest;
    };
    let Some(manifest) = read_entry(&mut archive, &manifest_name) else {
        return SignatureStatus::Unreadable;
    };
    let manifest = Manifest::parse(&manifest);

    for name in sig_files {
        let Some(sf) = read_entry(&mut archive, &name) else {
            return SignatureStatus::Unreadable;
        };
        if !signature_file_matches(&manifest, &Manifest::parse(&sf)) {
            return SignatureStatus::InvalidDigest;
        }
    }
    SignatureStatus::Ok
}

fn read_entry<R: Read + std::io::Seek>(archive: &mut zip::ZipArchive<R>, name: &str) -> Option<Vec<u8>> {
    let mut file = archive.by_name(name).ok()?;
    let mut buf = Vec::new();
    file.read_to_end(&mut buf).ok()?;
    Some(buf)
}

fn signature_file_matches(manifest: &Manifest<'_>, sf: &Manifest<'_>) -> bool {
    // A matching whole-manifest digest vouches for every section.
    let whole = digest_checks(&sf.main.attributes, "-Digest-Manifest", manifest.raw);
    if whole == Check::Match {
        return true;
    }
    let main_attrs = digest_checks(&sf.main.attributes, "-Digest-Manifest-Main-Attributes", manifest.main.raw);
    if main_attrs == Check::Mismatch {
        return false;
    }
    for section in &sf.entries {
        let Some(name) = section.name() else { continue };
        let Some(target) = manifest.entries.iter().find(|s| s.name() == Some(name)) else {
            // jarsigner reports signed entries missing from the manifest
            // separately; they are not a digest failure.
            continue;
        };
        if digest_checks(&section.attributes, "-Digest", target.raw) == Check::Mismatch {
            return false;
        }
    }
    true
}

#[derive(Debug, PartialEq, Eq)]
enum Check {
    Absent,
    Match,
    Mismatch,
}

/// Compares every `<ALG><suffix>` attribute with a known algorithm.
fn digest_checks(attrs: &[(String, String)], suffix: &str, data: &[u8]) -> Check {
    let mut seen = false;
    for (key, value) in attrs {
        let Some(alg) = strip_suffix_ci(key, suffix) else { continue };
        let Some(actual) = digest(alg, data) else { continue };
        seen = true;
        if STANDARD.encode(actual) != value.trim() {
            return Check::Mismatch;
        }
    }
    if seen {
        Check::Match
    } else {
        Check::Absent
    }
}

fn strip_suffix_ci<'a>(key: &'a str, suffix: &str) -> Option<&'a str> {
    let split = key.len().checked_sub(suffix.len())?;
    let (head, tail) = key.split_at_checked(split)?;
    (tail.eq_ignore_ascii_case(suffix) && !head.is_empty()).then_some(head)
}

pub(crate) fn digest(alg: &str, data: &[u8]) -> Option<Vec<u8>> {
    let out = match alg.to_ascii_uppercase().as_str() {
        "SHA1" | "SHA-1" => Sha1::digest(data).to_vec(),
        "SHA-256" | "SHA256" => Sha256::digest(data).to_vec(),
        "SHA-384" | "SHA384" => Sha384::digest(data).to_vec(),
        "SHA-512" | "SHA512" => Sha512::digest(data).to_vec(),
        _ => return None,
    };
    Some(out)
}

/// One manifest-style section with its exact source bytes.
#[derive(Debug)]
struct Section<'a> {
    raw: &'a [u8],
    attributes: Vec<(String, String)>,
}

impl Section<'_> {
    fn name(&self) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case("Name"))
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug)]
struct Manifest<'a> {
    raw: &'a [u8],
    main: Section<'a>,
    entries: Vec<Section<'a>>,
}

impl<'a> Manifest<'a> {
    fn parse(raw: &'a [u8]) -> Self {
        let mut sections = Vec::new();
        let mut start = 0;
        let mut pos = 0;
        let mut lines: Vec<&[u8]> = Vec::new();
        while pos < raw.len() {
            let (line, next) = next_line(raw, pos);
            pos = next;
            if line.is_empty() {
                // blank line closes the section and belongs to it
                sections.push(Section {
                    raw: &raw[start..pos],
                    attributes: parse_attributes(&lines),
                });
                lines.clear();
                start = pos;
            } else {
                lines.push(line);
            }
        }
        if start < raw.len() || sections.is_empty() {
            sections.push(Section {
                raw: &raw[start..],
                attributes: parse_attributes(&lines),
            });
        }
        let mut iter = sections.into_iter();
        let main = iter.next().expect("at least one section");
        Manifest {
            raw,
            main,
            entries: iter.filter(|s| !s.attributes.is_empty()).collect(),
        }
    }
}

/// Returns the line content (without terminator) and the offset after it.
fn next_line(raw: &[u8], pos: usize) -> (&[u8], usize) {
    let rest = &raw[pos..];
    match rest.iter().position(|&b| b == b'\n' || b == b'\r') {
        Some(i) => {
            let skip = if rest[i] == b'\r' && rest.get(i + 1) == Some(&b'\n') { 2 } else { 1 };
            (&rest[..i], pos + i + skip)
        }
        None => (rest, raw.len()),
    }
}

fn parse_attributes(lines: &[&[u8]]) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for line in lines {
        let text = String::from_utf8_lossy(line);
        if let Some(cont) = text.strip_prefix(' ') {
            if let Some((_, value)) = out.last_mut() {
                value.push_str(cont);
            }
        } else if let Some((key, value)) = text.split_once(':') {
            out.push((key.trim().to_owned(), value.strip_prefix(' ').unwrap_or(value).to_owned()));
        }
    }
    out
}
