//! Two-round build orchestration.
//!
//! Round 1 compiles each project with no classpath and the compiler's
//! default encoding. A failure goes through repair (encoding detection for
//! unmappable-character errors, index lookup for missing packages) and is
//! compiled exactly once more. There is never a third round.
//!
//! Artifacts for project `p` land in `<output_root>/projects/<p>/`:
//!
//! ```text
//! round1/{build.xml,plan.txt,sources.txt,command.txt,output.txt}
//! round1/classes/            only if round 1 succeeded
//! round2/...                 only if round 2 ran
//! resolution.tsv             only if repair ran
//! diagnostics.tsv            final diagnostics (empty on success)
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use log::{info, warn};

use crate::buildkit::{invoke_compiler, AdapterError, BuildPlan, CompileResult, CompileStatus, CompilerAdapter};
use crate::corpus::{self, ProjectRecord};
use crate::diagnostics::{self, Category, Diagnostic};
use crate::fqnindex::FqnIndex;
use crate::jarstore::{self, JarId};
use crate::resolver::{self, Encoding, EncodingError, ResolutionPlan};
use crate::tsv;

pub const PROJECTS_DIR: &str = "projects";
pub const OUTCOMES_FILE: &str = "outcomes.tsv";
pub const PROJECTS_FILE: &str = "projects.tsv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.tsv";
pub const RESOLUTION_FILE: &str = "resolution.tsv";
pub const OUTCOMES_HEADER: &str = "project_id\tstatus\tround\tclasspath_size\tencoding\twall_ms\n";
pub const PROJECTS_HEADER: &str = "project_id\tsource_files\tembedded_jars\n";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutcomeStatus {
    SuccessRound1,
    SuccessRound2,
    Fail,
}

impl OutcomeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeStatus::SuccessRound1 => "success_round1",
            OutcomeStatus::SuccessRound2 => "success_round2",
            OutcomeStatus::Fail => "fail",
        }
    }

    pub fn is_success(self) -> bool {
        self != OutcomeStatus::Fail
    }
}

impl fmt::Display for OutcomeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OutcomeStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "success_round1" => Ok(OutcomeStatus::SuccessRound1),
            "success_round2" => Ok(OutcomeStatus::SuccessRound2),
            "fail" => Ok(OutcomeStatus::Fail),
            _ => Err(format!("unknown status `{s}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub output_root: PathBuf,
    pub store_root: PathBuf,
    /// Run round 2 even when repair changed nothing.
    pub always_round2: bool,
}

#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub project_id: String,
    pub status: OutcomeStatus,
    pub round1_plan: BuildPlan,
    pub round1_result: CompileResult,
    pub repair: Option<ResolutionPlan>,
    pub round2_plan: Option<BuildPlan>,
    pub round2_result: Option<CompileResult>,
    pub artifact_dir: PathBuf,
    /// What the project failed with; empty for successes.
    pub diagnostics: Vec<Diagnostic>,
    pub source_file_count: usize,
    pub embedded_jar_count: usize,
    /// Set when the project could not be processed at all.
    pub internal_error: Option<String>,
}

impl BuildOutcome {
    pub fn rounds(&self) -> u8 {
        if self.round2_result.is_some() {
            2
        } else {
            1
        }
    }

    pub fn wall_time(&self) -> Duration {
        self.round1_result.wall_time + self.round2_result.as_ref().map_or(Duration::ZERO, |r| r.wall_time)
    }

    /// Plan of the last round that ran.
    pub fn final_plan(&self) -> &BuildPlan {
        self.round2_plan.as_ref().unwrap_or(&self.round1_plan)
    }

    pub fn record(&self) -> OutcomeRecord {
        let plan = self.final_plan();
        OutcomeRecord {
            project_id: self.project_id.clone(),
            status: self.status,
            rounds: self.rounds(),
            classpath_size: plan.classpath.len(),
            encoding: plan.encoding,
            wall_ms: self.wall_time().as_millis() as u64,
            source_file_count: self.source_file_count,
            embedded_jar_count: self.embedded_jar_count,
            diagnostics: self.diagnostics.clone(),
        }
    }
}

/// The persisted, path-free view of an outcome that reporting works on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeRecord {
    pub project_id: String,
    pub status: OutcomeStatus,
    pub rounds: u8,
    pub classpath_size: usize,
    pub encoding: Option<Encoding>,
    pub wall_ms: u64,
    pub source_file_count: usize,
    pub embedded_jar_count: usize,
    pub diagnostics: Vec<Diagnostic>,
}

/// Shared, read-only state for a run.
pub struct Pipeline<'a> {
    pub index: &'a FqnIndex,
    pub adapter: &'a dyn CompilerAdapter,
    pub options: PipelineOptions,
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(|source| PipelineError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn local_jar_ids(project: &ProjectRecord) -> Vec<JarId> {
    let archives = corpus::archive_files(&project.root).unwrap_or_else(|err| {
        warn!("{}: cannot list archives: {err}", project.id);
        Vec::new()
    });
    let ids: BTreeSet<JarId> = archives
        .iter()
        .filter_map(|rel| jarstore::hash_file(&project.root.join(rel)).ok())
        .collect();
    ids.into_iter().collect()
}

impl Pipeline<'_> {
    pub fn artifact_dir(&self, project_id: &str) -> PathBuf {
        self.options.output_root.join(PROJECTS_DIR).join(project_id)
    }

    /// Runs both rounds for one project. Does not persist.
    pub fn build_project(&self, project: &ProjectRecord) -> Result<BuildOutcome, PipelineError> {
        let artifact_dir = self.artifact_dir(&project.id);
        if artifact_dir.exists() {
            fs::remove_dir_all(&artifact_dir).map_err(|source| PipelineError::Write {
                path: artifact_dir.clone(),
                source,
            })?;
        }

        let round1_plan = BuildPlan::new(&project.id, &project.root, artifact_dir.join("round1"));
        let round1_result = invoke_compiler(self.adapter, &round1_plan)?;
        let mut outcome = BuildOutcome {
            project_id: project.id.clone(),
            status: OutcomeStatus::SuccessRound1,
            round1_plan,
            round1_result,
            repair: None,
            round2_plan: None,
            round2_result: None,
            artifact_dir: artifact_dir.clone(),
            diagnostics: Vec::new(),
            source_file_count: project.source_file_count,
            embedded_jar_count: project.embedded_jar_count,
            internal_error: None,
        };
        if outcome.round1_result.is_success() {
            return Ok(outcome);
        }

        let round1_diags = diagnostics::parse_output(&outcome.round1_result.raw_output);
        let repair = self.repair(project, &round1_diags);
        let mut round2_plan = BuildPlan::new(&project.id, &project.root, artifact_dir.join("round2"));
        round2_plan.classpath = repair.classpath.iter().map(|p| self.options.store_root.join(p)).collect();
        round2_plan.encoding = repair.encoding;

        outcome.status = OutcomeStatus::Fail;
        if repair.is_empty() && !self.options.always_round2 {
            outcome.diagnostics = round1_diags;
            outcome.diagnostics.extend(repair.errors.iter().cloned());
            outcome.repair = Some(repair);
            return Ok(outcome);
        }

        let round2_result = invoke_compiler(self.adapter, &round2_plan)?;
        if round2_result.is_success() {
            outcome.status = OutcomeStatus::SuccessRound2;
        } else {
            outcome.diagnostics = repair.errors.clone();
            outcome.diagnostics.extend(diagnostics::parse_output(&round2_result.raw_output));
        }
        outcome.repair = Some(repair);
        outcome.round2_plan = Some(round2_plan);
        outcome.round2_result = Some(round2_result);
        Ok(outcome)
    }

    fn repair(&self, project: &ProjectRecord, diags: &[Diagnostic]) -> ResolutionPlan {
        let missing = diagnostics::extract_missing_packages(diags);
        let mut plan = if missing.is_empty() {
            ResolutionPlan::default()
        } else {
            resolver::resolve_dependencies(&missing, &local_jar_ids(project), self.index)
        };

        if diags.iter().any(|d| d.category == Category::UnmappableCharacter) {
            let sources: Vec<PathBuf> = corpus::source_files(&project.root)
                .unwrap_or_default()
                .into_iter()
                .map(|rel| project.root.join(rel))
                .collect();
            match resolver::detect_encoding(&sources) {
                Ok(enc) => plan.encoding = Some(enc),
                Err(err @ EncodingError::TooManyEncodings(_)) => plan
                    .errors
                    .push(Diagnostic::synthetic(Category::TooManyEncodings, &err.to_string())),
                Err(err) => {
                    warn!("{}: encoding detection failed: {err}", project.id);
                    plan.errors.push(Diagnostic::synthetic(Category::Other, &err.to_string()));
                }
            }
        }
        plan
    }

    /// Outcome recorded when a project could not be processed.
    fn internal_failure(&self, project: &ProjectRecord, message: String) -> BuildOutcome {
        let artifact_dir = self.artifact_dir(&project.id);
        let raw = format!("error: internal: {message}\n");
        BuildOutcome {
            project_id: project.id.clone(),
            status: OutcomeStatus::Fail,
            round1_plan: BuildPlan::new(&project.id, &project.root, artifact_dir.join("round1")),
            round1_result: CompileResult {
                status: CompileStatus::Failure,
                command: String::new(),
                raw_output: raw.clone(),
                exit_code: None,
                produced_class_count: 0,
                wall_time: Duration::ZERO,
            },
            repair: None,
            round2_plan: None,
            round2_result: None,
            artifact_dir,
            diagnostics: diagnostics::parse_output(&raw),
            source_file_count: project.source_file_count,
            embedded_jar_count: project.embedded_jar_count,
            internal_error: Some(message),
        }
    }

    /// Builds and persists one project; any error or panic becomes a
    /// failed outcome.
    pub fn process(&self, project: &ProjectRecord) -> BuildOutcome {
        let attempt = panic::catch_unwind(AssertUnwindSafe(|| {
            let outcome = self.build_project(project)?;
            persist_outcome(&outcome)?;
            Ok::<_, PipelineError>(outcome)
        }));
        let message = match attempt {
            Ok(Ok(outcome)) => return outcome,
            Ok(Err(err)) => err.to_string(),
            Err(panic) => panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "worker panicked".to_owned()),
        };
        warn!("{}: {message}", project.id);
        let outcome = self.internal_failure(project, message);
        if let Err(err) = persist_outcome(&outcome) {
            warn!("{}: cannot persist failure: {err}", project.id);
        }
        outcome
    }

    /// Builds every project on `workers` threads; result sorted by id.
    pub fn run(&self, projects: &[ProjectRecord], workers: usize) -> Vec<BuildOutcome> {
        let workers = workers.max(1).min(projects.len().max(1));
        let next = AtomicUsize::new(0);
        let done = Mutex::new(Vec::with_capacity(projects.len()));
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(project) = projects.get(i) else { break };
                    let outcome = self.process(project);
                    info!("{}: {}", outcome.project_id, outcome.status);
                    done.lock().unwrap_or_else(|e| e.into_inner()).push(outcome);
                });
            }
        });
        let mut outcomes = done.into_inner().unwrap_or_else(|e| e.into_inner());
        outcomes.sort_by(|a, b| a.project_id.cmp(&b.project_id));
        outcomes
    }
}

fn persist_round(dir: &Path, result: &CompileResult, keep_classes: bool) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    write_file(&dir.join("command.txt"), format!("{}\n", result.command))?;
    write_file(&dir.join("output.txt"), &result.raw_output)?;
    let classes = dir.join(crate::buildkit::CLASSES_DIR);
    if !keep_classes && classes.exists() {
        fs::remove_dir_all(&classes).map_err(|source| PipelineError::Write { path: classes, source })?;
    }
    Ok(())
}

/// Writes the command, output, provenance and diagnostics of an outcome
/// next to the build files, and drops class trees of failed rounds.
pub fn persist_outcome(outcome: &BuildOutcome) -> Result<PathBuf, PipelineError> {
    let dir = &outcome.artifact_dir;
    persist_round(
        &outcome.round1_plan.workspace,
        &outcome.round1_result,
        outcome.status == OutcomeStatus::SuccessRound1,
    )?;
    if let (Some(plan), Some(result)) = (&outcome.round2_plan, &outcome.round2_result) {
        persist_round(&plan.workspace, result, outcome.status == OutcomeStatus::SuccessRound2)?;
    }
    if let Some(repair) = &outcome.repair {
        write_file(&dir.join(RESOLUTION_FILE), repair.render_provenance())?;
    }
    write_file(&dir.join(DIAGNOSTICS_FILE), diagnostics::render_diagnostics(&outcome.diagnostics))?;
    Ok(dir.clone())
}

pub fn render_outcomes(records: &[OutcomeRecord]) -> String {
    let mut sorted: Vec<&OutcomeRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.project_id.cmp(&b.project_id));
    let mut out = OUTCOMES_HEADER.to_owned();
    for r in sorted {
        out.push_str(&tsv::row([
            r.project_id.as_str(),
            r.status.as_str(),
            &r.rounds.to_string(),
            &r.classpath_size.to_string(),
            r.encoding.map_or("", |e| e.as_str()),
            &r.wall_ms.to_string(),
        ]));
    }
    out
}

pub fn render_projects(records: &[OutcomeRecord]) -> String {
    let mut sorted: Vec<&OutcomeRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.project_id.cmp(&b.project_id));
    let mut out = PROJECTS_HEADER.to_owned();
    for r in sorted {
        out.push_str(&tsv::row([
            r.project_id.as_str(),
            &r.source_file_count.to_string(),
            &r.embedded_jar_count.to_string(),
        ]));
    }
    out
}

fn parse_rows(text: &str, header: &str, path: &Path, ncols: usize) -> Result<Vec<(usize, Vec<String>)>, PipelineError> {
    let err = |line: usize, message: String| PipelineError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == header.trim_end() => {}
        _ => return Err(err(1, format!("expected header `{}`", header.trim_end()))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let cols: Vec<String> = line.split('\t').map(tsv::unfield).collect();
        if cols.len() != ncols {
            return Err(err(i + 1, format!("expected {ncols} columns, found {}", cols.len())));
        }
        rows.push((i + 1, cols));
    }
    Ok(rows)
}

/// Reads `outcomes.tsv`, `projects.tsv` and the per-project diagnostics
/// written by a run back into records.
pub fn load_records(output_root: &Path) -> Result<Vec<OutcomeRecord>, PipelineError> {
    let read = |path: &Path| {
        fs::read_to_string(path).map_err(|source| PipelineError::Read {
            path: path.to_path_buf(),
            source,
        })
    };
    let outcomes_path = output_root.join(OUTCOMES_FILE);
    let projects_path = output_root.join(PROJECTS_FILE);
    let outcomes = parse_rows(&read(&outcomes_path)?, OUTCOMES_HEADER, &outcomes_path, 6)?;
    let projects = match fs::read_to_string(&projects_path) {
        Ok(text) => parse_rows(&text, PROJECTS_HEADER, &projects_path, 3)?,
        Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
        Err(source) => return Err(PipelineError::Read { path: projects_path, source }),
    };
    let metrics: std::collections::HashMap<&str, (&str, &str, usize)> = projects
        .iter()
        .map(|(n, c)| (c[0].as_str(), (c[1].as_str(), c[2].as_str(), *n)))
        .collect();

    let mut records = Vec::with_capacity(outcomes.len());
    for (line, c) in &outcomes {
        let bad = |message: String| PipelineError::Parse {
            path: outcomes_path.clone(),
            line: *line,
            message,
        };
        let num = |s: &str, what: &str| s.parse::<u64>().map_err(|_| bad(format!("bad {what} `{s}`")));
        let project_id = c[0].clone();
        let (source_file_count, embedded_jar_count) = match metrics.get(project_id.as_str()) {
            Some((src, jars, pline)) => {
                let pbad = |s: &str| PipelineError::Parse {
                    path: projects_path.clone(),
                    line: *pline,
                    message: format!("bad count `{s}`"),
                };
                (src.parse().map_err(|_| pbad(src))?, jars.parse().map_err(|_| pbad(jars))?)
            }
            None => (0, 0),
        };
        let diag_path = output_root.join(PROJECTS_DIR).join(&project_id).join(DIAGNOSTICS_FILE);
        let diagnostics = match fs::read_to_string(&diag_path) {
            Ok(text) => diagnostics::parse_diagnostics(&text).map_err(|e| PipelineError::Parse {
                path: diag_path.clone(),
                line: e.line,
                message: e.message,
            })?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(source) => return Err(PipelineError::Read { path: diag_path, source }),
        };
        let rounds = num(&c[2], "round")?;
        if !(1..=2).contains(&rounds) {
            return Err(bad(format!("round must be 1 or 2, got {rounds}")));
        }
        records.push(OutcomeRecord {
            status: c[1].parse().map_err(bad)?,
            rounds: rounds as u8,
            classpath_size: num(&c[3], "classpath size")? as usize,
            encoding: match c[4].as_str() {
                "" => None,
                e => Some(e.parse().map_err(bad)?),
            },
            wall_ms: num(&c[5], "wall time")?,
            project_id,
            source_file_count,
            embedded_jar_count,
            diagnostics,
        });
    }
    Ok(records)
}

/// Writes the run-level tables.
pub fn write_run_tables(output_root: &Path, outcomes: &[BuildOutcome]) -> Result<(), PipelineError> {
    fs::create_dir_all(output_root).map_err(|source| PipelineError::Write {
        path: output_root.to_path_buf(),
        source,
    })?;
    let records: Vec<OutcomeRecord> = outcomes.iter().map(BuildOutcome::record).collect();
    write_file(&output_root.join(OUTCOMES_FILE), render_outcomes(&records))?;
    write_file(&output_root.join(PROJECTS_FILE), render_projects(&records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, status: OutcomeStatus) -> OutcomeRecord {
        OutcomeRecord {
            project_id: id.into(),
            status,
            rounds: if status == OutcomeStatus::SuccessRound1 { 1 } else { 2 },
            classpath_size: 1,
            encoding: Some(Encoding::Windows1252),
            wall_ms: 12,
            source_file_count: 3,
            embedded_jar_count: 1,
            diagnostics: vec![],
        }
    }

    #[test]
    fn outcome_tables_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let recs = vec![record("b", OutcomeStatus::Fail), record("a", OutcomeStatus::SuccessRound2)];
        fs::write(dir.path().join(OUTCOMES_FILE), render_outcomes(&recs)).unwrap();
        fs::write(dir.path().join(PROJECTS_FILE), render_projects(&recs)).unwrap();
        let back = load_records(dir.path()).unwrap();
        assert_eq!(back, vec![recs[1].clone(), recs[0].clone()]);
    }

    #[test]
    fn bad_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!("{OUTCOMES_HEADER}a\tsuccess_round1\t1\t0\t\t5\nb\tmaybe\t1\t0\t\t5\n");
        fs::write(dir.path().join(OUTCOMES_FILE), text).unwrap();
        match load_records(dir.path()) {
            Err(PipelineError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn status_names() {
        for s in [OutcomeStatus::SuccessRound1, OutcomeStatus::SuccessRound2, OutcomeStatus::Fail] {
            assert_eq!(s.as_str().parse::<OutcomeStatus>().unwrap(), s);
        }
    }
}
