//! Inverted index from fully-qualified type names to archives.
//!
//! Every type listed in an archive is indexed under its full name and under
//! each of its prefixes with at least two segments, so that a wildcard-style
//! package reference (`edu.uci`) finds the archives holding types below it.
//! Single-segment names (`com`, `org`) are never keys.
//!
//! Persisted form:
//!
//! ```text
//! fqnindex v1 jars=<n> keys=<n>
//! <fqn>\t<jar_id>[,<jar_id>...]
//! ```
//!
//! with keys sorted and jar ids ascending within each line.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{self, Cursor};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;

use crate::jarstore::{JarEntry, JarId};

const CLASS_SUFFIX: &str = ".class";
const HEADER_MAGIC: &str = "fqnindex v1";

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// A dot-separated name with at least two non-empty segments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FqnKey(String);

impl FqnKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn segments(&self) -> impl Iterator<Item = &str> {
        self.0.split('.')
    }
}

impl FromStr for FqnKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut n = 0;
        for seg in s.split('.') {
            if seg.is_empty() || seg.contains(['/', '\\', '\t', '\n', '\r', ',', ' ']) {
                return Err(format!("invalid segment in `{s}`"));
            }
            n += 1;
        }
        if n < 2 {
            return Err(format!("`{s}` has fewer than two segments"));
        }
        Ok(FqnKey(s.to_owned()))
    }
}

impl fmt::Display for FqnKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Maps one archive entry name to a type name, if it names a class.
pub fn entry_to_fqn(entry: &str) -> Option<String> {
    let stem = entry.strip_suffix(CLASS_SUFFIX)?;
    if stem.len() >= 9 && stem[..9].eq_ignore_ascii_case("META-INF/") {
        return None;
    }
    let segments: Vec<&str> = stem.split('/').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return None;
    }
    let (last, package) = segments.split_last()?;
    // package-info, module-info
    if last.contains('-') {
        return None;
    }
    let outer = last.split('$').next().unwrap_or_default();
    if outer.is_empty() {
        return None;
    }
    let mut fqn = package.join(".");
    if !fqn.is_empty() {
        fqn.push('.');
    }
    fqn.push_str(outer);
    Some(fqn)
}

/// Full type names listed in an archive's table of contents.
pub fn list_types_bytes(bytes: &[u8]) -> Result<BTreeSet<String>, zip::result::ZipError> {
    let archive = zip::ZipArchive::new(Cursor::new(bytes))?;
    Ok(archive.file_names().filter_map(entry_to_fqn).collect())
}

/// As [`list_types_bytes`]; unreadable archives yield an empty set.
pub fn list_types(path: &Path) -> BTreeSet<String> {
    let listed = fs::read(path)
        .map_err(|e| e.to_string())
        .and_then(|b| list_types_bytes(&b).map_err(|e| e.to_string()));
    listed.unwrap_or_else(|err| {
        warn!("cannot list {}: {err}", path.display());
        BTreeSet::new()
    })
}

/// All keys under which `fqn` is indexed: its prefixes of length 2..=n.
pub fn expand_prefixes(fqn: &str) -> BTreeSet<FqnKey> {
    let segments: Vec<&str> = fqn.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return BTreeSet::new();
    }
    (2..=segments.len())
        .filter_map(|k| segments[..k].join(".").parse().ok())
        .collect()
}

/// Key set an archive contributes to the index.
pub fn keys_of_types<'a>(types: impl IntoIterator<Item = &'a String>) -> BTreeSet<FqnKey> {
    types.into_iter().flat_map(|t| expand_prefixes(t)).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FqnIndex {
    postings: BTreeMap<FqnKey, Vec<JarId>>,
    jar_count: usize,
}

/// Accumulates postings in any order; [`IndexBuilder::build`] normalises.
#[derive(Debug, Default)]
pub struct IndexBuilder {
    postings: BTreeMap<FqnKey, BTreeSet<JarId>>,
    jars: BTreeSet<JarId>,
}

impl IndexBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_jar<'a>(&mut self, jar: &JarId, types: impl IntoIterator<Item = &'a String>) {
        self.jars.insert(jar.clone());
        for key in keys_of_types(types) {
            self.postings.entry(key).or_default().insert(jar.clone());
        }
    }

    pub fn build(self) -> FqnIndex {
        FqnIndex {
            postings: self
                .postings
                .into_iter()
                .map(|(k, v)| (k, v.into_iter().collect()))
                .collect(),
            jar_count: self.jars.len(),
        }
    }
}

/// Indexes the eligible archives among `jars`, read from `store_root`.
pub fn build_index(store_root: &Path, jars: &[JarEntry]) -> FqnIndex {
    let mut builder = IndexBuilder::new();
    for jar in jars {
        if !jar.is_eligible() {
            warn!("not indexing {} ({})", jar.jar_id, jar.signature_status);
            continue;
        }
        let types = list_types(&store_root.join(&jar.store_path));
        builder.add_jar(&jar.jar_id, &types);
    }
    builder.build()
}

impl FqnIndex {
    /// Exact lookup; no reduction or wildcard handling.
    pub fn query(&self, key: &str) -> &[JarId] {
        // Keys are validated on insert, so an unparsable key is simply absent.
        match key.parse::<FqnKey>() {
            Ok(k) => self.postings.get(&k).map_or(&[], Vec::as_slice),
            Err(_) => &[],
        }
    }

    pub fn jar_count(&self) -> usize {
        self.jar_count
    }

    pub fn key_count(&self) -> usize {
        self.postings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.postings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FqnKey, &[JarId])> {
        self.postings.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn render(&self) -> String {
        let mut out = format!("{HEADER_MAGIC} jars={} keys={}\n", self.jar_count, self.postings.len());
        for (key, jars) in &self.postings {
            out.push_str(key.as_str());
            out.push('\t');
            for (i, j) in jars.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(j.as_str());
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, IndexError> {
        let bad = |line: usize, message: String| IndexError::Malformed { line, message };
        let mut lines = text.split_terminator('\n').enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header".into()))?;
        let (jar_count, key_count) = parse_header(header).ok_or_else(|| bad(1, format!("bad header `{header}`")))?;

        let mut postings = BTreeMap::new();
        let mut prev: Option<FqnKey> = None;
        for (i, line) in lines {
            let n = i + 1;
            let (key, ids) = line
                .split_once('\t')
                .ok_or_else(|| bad(n, "expected `<fqn>\\t<jar_id>[,...]`".into()))?;
            let key: FqnKey = key.parse().map_err(|e| bad(n, e))?;
            if let Some(p) = &prev {
                if *p == key {
                    return Err(bad(n, format!("duplicate key `{key}`")));
                }
                if *p > key {
                    return Err(bad(n, format!("key `{key}` out of order")));
                }
            }
            let mut jars: Vec<JarId> = Vec::new();
            for id in ids.split(',') {
                let id: JarId = id.parse().map_err(|e| bad(n, e))?;
                if jars.last().is_some_and(|last| *last >= id) {
                    return Err(bad(n, "jar ids not strictly ascending".into()));
                }
                jars.push(id);
            }
            prev = Some(key.clone());
            postings.insert(key, jars);
        }
        if postings.len() != key_count {
            return Err(bad(1, format!("header declares {key_count} keys, found {}", postings.len())));
        }
        Ok(FqnIndex { postings, jar_count })
    }

    pub fn persist(&self, path: &Path) -> Result<(), IndexError> {
        let err = |source| IndexError::Write { path: path.to_path_buf(), source };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(err)?;
        }
        fs::write(path, self.render()).map_err(err)
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        let text = fs::read_to_string(path).map_err(|source| IndexError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix(HEADER_MAGIC)?.strip_prefix(' ')?;
    let (jars, keys) = rest.split_once(' ')?;
    Some((
        jars.strip_prefix("jars=")?.parse().ok()?,
        keys.strip_prefix("keys=")?.parse().ok()?,
    ))
}
