//! Project discovery under a corpus root.
//!
//! Every immediate child directory of the corpus root is one project. A
//! project is kept only if it holds at least one `.java` file somewhere
//! below it. Native build files are detected and recorded, never run.

use std::collections::BTreeSet;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use log::warn;
use walkdir::WalkDir;

pub const SOURCE_EXTENSION: &str = "java";
pub const ARCHIVE_EXTENSION: &str = "jar";
pub const ANDROID_MANIFEST: &str = "AndroidManifest.xml";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read corpus root {path}: {source}")]
    UnreadableRoot { path: PathBuf, source: io::Error },
    #[error("cannot walk project {path}: {source}")]
    UnreadableProject { path: PathBuf, source: walkdir::Error },
}

/// Native build systems recognised by their conventional file name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NativeBuild {
    AntLike,
    MavenLike,
    GradleLike,
}

impl NativeBuild {
    pub fn from_file_name(name: &str) -> Option<Self> {
        match name {
            "build.xml" => Some(Self::AntLike),
            "pom.xml" => Some(Self::MavenLike),
            "build.gradle" => Some(Self::GradleLike),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AntLike => "ant_like",
            Self::MavenLike => "maven_like",
            Self::GradleLike => "gradle_like",
        }
    }
}

impl fmt::Display for NativeBuild {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectRecord {
    /// Path of the project relative to the corpus root.
    pub id: String,
    pub root: PathBuf,
    pub source_file_count: usize,
    /// Archives under the root before deduplication.
    pub embedded_jar_count: usize,
    pub is_android: bool,
    pub native_build_files: BTreeSet<NativeBuild>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScanSummary {
    pub projects: usize,
    pub excluded_no_source: usize,
    pub android: usize,
    pub skipped_unreadable: usize,
}

impl fmt::Display for ScanSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "projects={} excluded_no_source={} android={}",
            self.projects, self.excluded_no_source, self.android
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct Scan {
    pub records: Vec<ProjectRecord>,
    pub summary: ScanSummary,
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension().and_then(|e| e.to_str()) == Some(ext)
}

fn has_extension_ci(path: &Path, ext: &str) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn walk_files(root: &Path) -> impl Iterator<Item = Result<walkdir::DirEntry, walkdir::Error>> {
    WalkDir::new(root)
        .follow_links(false)
        .sort_by_file_name()
        .into_iter()
        .filter(|e| e.as_ref().map_or(true, |e| e.file_type().is_file()))
}

/// Inspects one project directory. `Ok(None)` means it has no sources.
pub fn scan_project(corpus_root: &Path, root: &Path) -> Result<Option<ProjectRecord>, CorpusError> {
    let mut record = ProjectRecord {
        id: relative_id(corpus_root, root),
        root: root.to_path_buf(),
        source_file_count: 0,
        embedded_jar_count: 0,
        is_android: false,
        native_build_files: BTreeSet::new(),
    };
    for entry in walk_files(root) {
        let entry = entry.map_err(|source| CorpusError::UnreadableProject {
            path: root.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if has_extension(path, SOURCE_EXTENSION) {
            record.source_file_count += 1;
        } else if has_extension_ci(path, ARCHIVE_EXTENSION) {
            record.embedded_jar_count += 1;
        }
        if let Some(name) = entry.file_name().to_str() {
            if name == ANDROID_MANIFEST {
                record.is_android = true;
            }
            if let Some(kind) = NativeBuild::from_file_name(name) {
                record.native_build_files.insert(kind);
            }
        }
    }
    Ok((record.source_file_count > 0).then_some(record))
}

fn relative_id(corpus_root: &Path, root: &Path) -> String {
    let rel = root.strip_prefix(corpus_root).unwrap_or(root);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Scans every top-level directory under `corpus_root`.
pub fn scan_corpus(corpus_root: &Path) -> Result<Scan, CorpusError> {
    let unreadable = |source| CorpusError::UnreadableRoot {
        path: corpus_root.to_path_buf(),
        source,
    };
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(corpus_root).map_err(unreadable)? {
        let entry = entry.map_err(unreadable)?;
        // file_type() does not follow symlinks
        if entry.file_type().map_err(unreadable)?.is_dir() {
            dirs.push(entry.path());
        }
    }
    dirs.sort();

    let mut scan = Scan::default();
    for dir in dirs {
        match scan_project(corpus_root, &dir) {
            Ok(Some(record)) => scan.records.push(record),
            Ok(None) => scan.summary.excluded_no_source += 1,
            Err(err) => {
                warn!("skipping project: {err}");
                scan.summary.skipped_unreadable += 1;
            }
        }
    }
    scan.records.sort_by(|a, b| a.id.cmp(&b.id));
    scan.summary.projects = scan.records.len();
    scan.summary.android = scan.records.iter().filter(|r| r.is_android).count();
    Ok(scan)
}

/// Splits records on the Android flag, keeping relative order.
pub fn partition_android(records: Vec<ProjectRecord>) -> (Vec<ProjectRecord>, Vec<ProjectRecord>) {
    records.into_iter().partition(|r| !r.is_android)
}

/// Source files of a project, sorted, as paths relative to `root`.
pub fn source_files(root: &Path) -> io::Result<Vec<PathBuf>> {
    files_matching(root, |p| has_extension(p, SOURCE_EXTENSION))
}

/// Embedded archives of a project, sorted, as paths relative to `root`.
pub fn archive_files(root: &Path) -> io::Result<Vec<PathBuf>> {
    files_matching(root, |p| has_extension_ci(p, ARCHIVE_EXTENSION))
}

fn files_matching(root: &Path, keep: impl Fn(&Path) -> bool) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in walk_files(root) {
        let entry = entry.map_err(io::Error::from)?;
        if keep(entry.path()) {
            let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
            out.push(rel.to_path_buf());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn touch(path: &Path) {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, b"x").unwrap();
    }

    fn record(id: &str, android: bool) -> ProjectRecord {
        ProjectRecord {
            id: id.into(),
            root: PathBuf::from(id),
            source_file_count: 1,
            embedded_jar_count: 0,
            is_android: android,
            native_build_files: BTreeSet::new(),
        }
    }

    #[test]
    fn empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let scan = scan_corpus(dir.path()).unwrap();
        assert!(scan.records.is_empty());
        assert_eq!(scan.summary.to_string(), "projects=0 excluded_no_source=0 android=0");
    }

    #[test]
    fn android_manifest_anywhere_flags_project() {
        let dir = tempfile::tempdir().unwrap();
        touch(&dir.path().join("p/app/AndroidManifest.xml"));
        touch(&dir.path().join("p/app/src/Main.java"));
        let scan = scan_corpus(dir.path()).unwrap();
        assert_eq!(scan.records.len(), 1);
        assert!(scan.records[0].is_android);
        assert_eq!(scan.summary.android, 1);
    }

    #[test]
    fn maven_project_detection() {
        let dir = tempfile::tempdir().unwrap();
        touch(&dir.path().join("m/pom.xml"));
        touch(&dir.path().join("m/src/A.java"));
        let scan = scan_corpus(dir.path()).unwrap();
        let r = &scan.records[0];
        assert_eq!(r.id, "m");
        assert_eq!(r.source_file_count, 1);
        assert_eq!(r.native_build_files, BTreeSet::from([NativeBuild::MavenLike]));
        assert!(!r.is_android);
    }

    #[test]
    fn counts_sources_jars_and_excludes_sourceless() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        touch(&root.join("b/x/A.java"));
        touch(&root.join("b/y/z/B.java"));
        touch(&root.join("b/lib/one.jar"));
        touch(&root.join("b/lib/TWO.JAR"));
        touch(&root.join("b/build.xml"));
        touch(&root.join("b/sub/build.gradle"));
        touch(&root.join("b/notes.javax"));
        touch(&root.join("a/readme.txt"));
        touch(&root.join("loose.java"));
        let scan = scan_corpus(root).unwrap();
        assert_eq!(scan.records.len(), 1);
        let r = &scan.records[0];
        assert_eq!(r.source_file_count, 2);
        assert_eq!(r.embedded_jar_count, 2);
        assert_eq!(
            r.native_build_files,
            BTreeSet::from([NativeBuild::AntLike, NativeBuild::GradleLike])
        );
        assert_eq!(scan.summary.excluded_no_source, 1);
        assert_eq!(source_files(&r.root).unwrap(), vec![PathBuf::from("x/A.java"), PathBuf::from("y/z/B.java")]);
    }

    #[test]
    fn records_sorted_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        for id in ["zeta", "alpha", "mid"] {
            touch(&dir.path().join(id).join("S.java"));
        }
        let a = scan_corpus(dir.path()).unwrap();
        let b = scan_corpus(dir.path()).unwrap();
        let ids: Vec<_> = a.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["alpha", "mid", "zeta"]);
        assert_eq!(a.records, b.records);
    }

    #[cfg(unix)]
    #[test]
    fn symlinks_not_followed() {
        let dir = tempfile::tempdir().unwrap();
        let outside = tempfile::tempdir().unwrap();
        touch(&outside.path().join("Escaped.java"));
        touch(&dir.path().join("p/A.java"));
        std::os::unix::fs::symlink(outside.path(), dir.path().join("p/link")).unwrap();
        std::os::unix::fs::symlink(outside.path(), dir.path().join("linked_project")).unwrap();
        let scan = scan_corpus(dir.path()).unwrap();
        assert_eq!(scan.records.len(), 1);
        assert_eq!(scan.records[0].source_file_count, 1);
    }

    #[test]
    fn missing_root_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            scan_corpus(&dir.path().join("nope")),
            Err(CorpusError::UnreadableRoot { .. })
        ));
    }

    #[test]
    fn partition_cases() {
        let (b, a) = partition_android(vec![]);
        assert!(b.is_empty() && a.is_empty());

        let (b, a) = partition_android(vec![record("p1", true), record("p2", false)]);
        assert_eq!(b, vec![record("p2", false)]);
        assert_eq!(a, vec![record("p1", true)]);

        let plain = vec![record("a", false), record("b", false), record("c", false)];
        let (b, a) = partition_android(plain.clone());
        assert_eq!(b, plain);
        assert!(a.is_empty());
    }
}
