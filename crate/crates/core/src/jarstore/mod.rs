//! Central, content-addressed store of harvested JAR archives.
//!
//! Archives are identified by the SHA-256 of their bytes and stored at
//! `<first two hex chars>/<jar_id>.jar` below the store root. Archives whose
//! signature digests do not verify, or that cannot be opened as zip
//! containers, are recorded in the manifest but never copied.

mod signature;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use sha2::{Digest, Sha256};

use crate::corpus::{self, ProjectRecord};
use crate::tsv;

pub use signature::{verify_signature, verify_signature_bytes};

pub const MANIFEST_FILE: &str = "jars.tsv";
/// Project id recorded for archives taken from operator seed directories.
pub const SEED_ORIGIN: &str = "@seed";

#[derive(Debug, thiserror::Error)]
pub enum JarStoreError {
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("store entry {path} exists with different content")]
    Conflict { path: PathBuf },
    #[error("{path}:{line}: {message}")]
    Manifest { path: PathBuf, line: usize, message: String },
}

/// Hex SHA-256 of an archive's bytes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JarId(String);

impl JarId {
    pub fn of_bytes(bytes: &[u8]) -> Self {
        JarId(hex::encode(Sha256::digest(bytes)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// `<first 2 hex chars>/<id>.jar`
    pub fn store_path(&self) -> String {
        format!("{}/{}.jar", &self.0[..2], self.0)
    }
}

impl FromStr for JarId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            Ok(JarId(s.to_owned()))
        } else {
            Err(format!("invalid jar id `{s}`"))
        }
    }
}

impl fmt::Display for JarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SignatureStatus {
    Ok,
    InvalidDigest,
    Unreadable,
}

impl SignatureStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::InvalidDigest => "invalid_digest",
            Self::Unreadable => "unreadable",
        }
    }
}

impl FromStr for SignatureStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ok" => Ok(Self::Ok),
            "invalid_digest" => Ok(Self::InvalidDigest),
            "unreadable" => Ok(Self::Unreadable),
            _ => Err(format!("unknown signature status `{s}`")),
        }
    }
}

impl fmt::Display for SignatureStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Origin {
    pub project: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JarEntry {
    pub jar_id: JarId,
    pub store_path: String,
    pub signature_status: SignatureStatus,
    pub origins: Vec<Origin>,
}

impl JarEntry {
    pub fn is_eligible(&self) -> bool {
        self.signature_status == SignatureStatus::Ok
    }
}

#[derive(Debug, Clone, Default)]
pub struct Collection {
    /// Sorted by jar id.
    pub entries: Vec<JarEntry>,
    /// Archives newly written to the store by this run.
    pub copied: usize,
}

/// Hashes an archive file.
pub fn hash_file(path: &Path) -> io::Result<JarId> {
    fs::read(path).map(|b| JarId::of_bytes(&b))
}

#[derive(Default)]
struct Pending {
    origins: Vec<Origin>,
    source: PathBuf,
}

/// Harvests every archive under every project root into `store_root`.
pub fn collect_jars(records: &[ProjectRecord], store_root: &Path) -> Result<Collection, JarStoreError> {
    collect_jars_with_seeds(records, &[], store_root)
}

/// As [`collect_jars`], also taking operator-provided archives from
/// `seed_dirs` (origin project [`SEED_ORIGIN`]).
pub fn collect_jars_with_seeds(
    records: &[ProjectRecord],
    seed_dirs: &[PathBuf],
    store_root: &Path,
) -> Result<Collection, JarStoreError> {
    let mut pending: BTreeMap<JarId, Pending> = BTreeMap::new();
    let roots = records
        .iter()
        .map(|r| (r.id.as_str(), r.root.as_path()))
        .chain(seed_dirs.iter().map(|d| (SEED_ORIGIN, d.as_path())));

    for (project, root) in roots {
        let archives = match corpus::archive_files(root) {
            Ok(a) => a,
            Err(err) => {
                warn!("cannot list archives of {}: {err}", root.display());
                continue;
            }
        };
        for rel in archives {
            let path = root.join(&rel);
            let id = match hash_file(&path) {
                Ok(id) => id,
                Err(err) => {
                    warn!("cannot read {}: {err}", path.display());
                    continue;
                }
            };
            let slot = pending.entry(id).or_default();
            if slot.origins.is_empty() {
                slot.source = path;
            }
            slot.origins.push(Origin {
                project: project.to_owned(),
                path: rel.to_string_lossy().replace('\\', "/"),
            });
        }
    }

    let mut out = Collection::default();
    for (jar_id, p) in pending {
        let bytes = fs::read(&p.source).map_err(|source| JarStoreError::Read {
            path: p.source.clone(),
            source,
        })?;
        let status = verify_signature_bytes(&bytes);
        let store_path = jar_id.store_path();
        if status == SignatureStatus::Ok && store_bytes(store_root, &store_path, &bytes)? {
            out.copied += 1;
        }
        let mut origins = p.origins;
        origins.sort();
        origins.dedup();
        out.entries.push(JarEntry {
            jar_id,
            store_path,
            signature_status: status,
            origins,
        });
    }
    Ok(out)
}

/// Writes `bytes` at `rel` unless an identical file already exists.
/// Returns whether a copy was made.
fn store_bytes(store_root: &Path, rel: &str, bytes: &[u8]) -> Result<bool, JarStoreError> {
    let dest = store_root.join(rel);
    let write_err = |source| JarStoreError::Write { path: dest.clone(), source };
    match fs::read(&dest) {
        Ok(existing) if existing == bytes => return Ok(false),
        Ok(_) => return Err(JarStoreError::Conflict { path: dest }),
        Err(err) if err.kind() == io::ErrorKind::NotFound => {}
        Err(source) => return Err(JarStoreError::Read { path: dest, source }),
    }
    fs::create_dir_all(dest.parent().expect("sharded path has a parent")).map_err(write_err)?;
    let tmp = dest.with_extension(format!("jar.tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(write_err)?;
    match fs::rename(&tmp, &dest) {
        Ok(()) => Ok(true),
        Err(source) => {
            let _ = fs::remove_file(&tmp);
            // another writer may have won the race
            match fs::read(&dest) {
                Ok(existing) if existing == bytes => Ok(false),
                _ => Err(write_err(source)),
            }
        }
    }
}

/// One row of `jars.tsv`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub jar_id: JarId,
    pub store_path: String,
    pub signature_status: SignatureStatus,
    pub origin_count: usize,
}

impl From<&JarEntry> for ManifestRow {
    fn from(e: &JarEntry) -> Self {
        ManifestRow {
            jar_id: e.jar_id.clone(),
            store_path: e.store_path.clone(),
            signature_status: e.signature_status,
            origin_count: e.origins.len(),
        }
    }
}

pub fn render_manifest(entries: &[JarEntry]) -> String {
    let mut rows: Vec<ManifestRow> = entries.iter().map(ManifestRow::from).collect();
    rows.sort_by(|a, b| a.jar_id.cmp(&b.jar_id));
    rows.iter()
        .map(|r| {
            tsv::row([
                r.jar_id.as_str(),
                &r.store_path,
                r.signature_status.as_str(),
                &r.origin_count.to_string(),
            ])
        })
        .collect()
}

pub fn write_manifest(store_root: &Path, entries: &[JarEntry]) -> Result<PathBuf, JarStoreError> {
    let path = store_root.join(MANIFEST_FILE);
    let write_err = |source| JarStoreError::Write { path: path.clone(), source };
    fs::create_dir_all(store_root).map_err(write_err)?;
    let mut f = fs::File::create(&path).map_err(write_err)?;
    f.write_all(render_manifest(entries).as_bytes()).map_err(write_err)?;
    Ok(path)
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<Vec<ManifestRow>, JarStoreError> {
    let err = |line: usize, message: String| JarStoreError::Manifest {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let cols: Vec<&str> = line.split('\t').collect();
        let [id, store_path, status, count] = cols[..] else {
            return Err(err(n, format!("expected 4 columns, found {}", cols.len())));
        };
        let jar_id: JarId = id.parse().map_err(|e| err(n, e))?;
        if store_path != jar_id.store_path() {
            return Err(err(n, format!("store path `{store_path}` does not match jar id")));
        }
        rows.push(ManifestRow {
            jar_id,
            store_path: store_path.to_owned(),
            signature_status: status.parse().map_err(|e| err(n, e))?,
            origin_count: count.parse().map_err(|_| err(n, format!("bad origin count `{count}`")))?,
        });
    }
    Ok(rows)
}

pub fn read_manifest(store_root: &Path) -> Result<Vec<ManifestRow>, JarStoreError> {
    let path = store_root.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|source| JarStoreError::Read {
        path: path.clone(),
        source,
    })?;
    parse_manifest(&text, &path)
}
