//! Compiler invocation.
//!
//! A [`BuildPlan`] is rendered into an Ant build file for the record and
//! executed through a [`CompilerAdapter`]. Two adapters exist: [`JavacCompiler`]
//! shells out to a real JVM compiler, [`FakeCompiler`] replays the
//! requirements scripted in a fixture manifest.

mod fake;
mod javac;
mod plan;

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use walkdir::WalkDir;

use crate::corpus;

pub use fake::{FakeCompiler, FixtureManifest, FIXTURE_MANIFEST};
pub use javac::JavacCompiler;
pub use plan::{
    parse_plan_manifest, render_build_file, render_plan_manifest, BuildPlan, PlanError, BUILD_FILE, CLASSES_DIR,
    EXT_DIR, PLAN_FILE, SOURCES_FILE,
};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);

#[derive(Debug, thiserror::Error)]
pub enum AdapterError {
    #[error("compiler unavailable: {0}")]
    Unavailable(String),
    #[error("fixture manifest {path}:{line}: {message}")]
    Fixture { path: PathBuf, line: usize, message: String },
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl AdapterError {
    pub(crate) fn io(context: impl fmt::Display, source: io::Error) -> Self {
        AdapterError::Io {
            context: context.to_string(),
            source,
        }
    }
}

/// What an adapter reports back about one compiler run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRun {
    /// Exact command line, as persisted.
    pub command: String,
    pub exit_code: Option<i32>,
    pub output: String,
    pub timed_out: bool,
}

pub trait CompilerAdapter: Send + Sync {
    fn name(&self) -> &str;

    /// Compiles `sources` (absolute paths, also listed one per line in
    /// `plan.sources_list()`) into `plan.output_dir()`.
    fn run(&self, plan: &BuildPlan, sources: &[PathBuf]) -> Result<RawRun, AdapterError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompileStatus {
    Success,
    Failure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompileResult {
    pub status: CompileStatus,
    pub command: String,
    pub raw_output: String,
    pub exit_code: Option<i32>,
    pub produced_class_count: usize,
    pub wall_time: Duration,
}

impl CompileResult {
    pub fn is_success(&self) -> bool {
        self.status == CompileStatus::Success
    }
}

/// Compiler arguments shared by both adapters, relative to the workspace.
pub(crate) fn javac_args(plan: &BuildPlan, with_extdirs: bool) -> Vec<String> {
    let mut args = vec!["-d".to_owned(), plan.display_path(&plan.output_dir())];
    if let Some(enc) = plan.encoding {
        args.push("-encoding".into());
        args.push(enc.as_str().into());
    }
    if !plan.classpath.is_empty() {
        let sep = if cfg!(windows) { ";" } else { ":" };
        let joined: Vec<String> = plan.classpath.iter().map(|p| plan.display_path(p)).collect();
        args.push("-classpath".into());
        args.push(joined.join(sep));
    }
    if plan.extensions_override && with_extdirs {
        args.push("-extdirs".into());
        args.push(plan.display_path(&plan.ext_dir()));
    }
    args.push(format!("@{}", plan.display_path(&plan.sources_list())));
    args
}

pub(crate) fn shell_join<'a>(words: impl IntoIterator<Item = &'a str>) -> String {
    words
        .into_iter()
        .map(|w| {
            let plain = !w.is_empty()
                && w.bytes()
                    .all(|b| b.is_ascii_alphanumeric() || b"-_./:@=,+%".contains(&b));
            if plain {
                w.to_owned()
            } else {
                format!("'{}'", w.replace('\'', r"'\''"))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn count_class_files(dir: &Path) -> usize {
    WalkDir::new(dir)
        .follow_links(false)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "class"))
        .count()
}

/// Prepares the workspace, runs the adapter and judges the result.
///
/// Success needs a zero exit status and at least one class file in the
/// output directory.
pub fn invoke_compiler(adapter: &dyn CompilerAdapter, plan: &BuildPlan) -> Result<CompileResult, AdapterError> {
    let ws = &plan.workspace;
    fs::create_dir_all(ws).map_err(|e| AdapterError::io(ws.display(), e))?;
    let out = plan.output_dir();
    if out.exists() {
        fs::remove_dir_all(&out).map_err(|e| AdapterError::io(out.display(), e))?;
    }
    fs::create_dir_all(&out).map_err(|e| AdapterError::io(out.display(), e))?;
    if plan.extensions_override {
        let ext = plan.ext_dir();
        fs::create_dir_all(&ext).map_err(|e| AdapterError::io(ext.display(), e))?;
    }

    let sources: Vec<PathBuf> = corpus::source_files(&plan.source_root)
        .map_err(|e| AdapterError::io(plan.source_root.display(), e))?
        .into_iter()
        .map(|rel| plan.source_root.join(rel))
        .collect();
    let listing: String = sources.iter().map(|p| format!("{}\n", p.display())).collect();
    fs::write(plan.sources_list(), listing).map_err(|e| AdapterError::io(plan.sources_list().display(), e))?;
    let build_file = ws.join(BUILD_FILE);
    fs::write(&build_file, render_build_file(plan)).map_err(|e| AdapterError::io(build_file.display(), e))?;
    let plan_file = ws.join(PLAN_FILE);
    fs::write(&plan_file, render_plan_manifest(plan)).map_err(|e| AdapterError::io(plan_file.display(), e))?;

    let started = Instant::now();
    let run = adapter.run(plan, &sources)?;
    let wall_time = started.elapsed();

    let mut raw_output = run.output;
    if run.timed_out {
        if !raw_output.is_empty() && !raw_output.ends_with('\n') {
            raw_output.push('\n');
        }
        raw_output.push_str("error: timeout: compiler did not finish in time\n");
    }
    let produced_class_count = count_class_files(&out);
    let ok = !run.timed_out && run.exit_code == Some(0) && produced_class_count > 0;
    Ok(CompileResult {
        status: if ok { CompileStatus::Success } else { CompileStatus::Failure },
        command: run.command,
        raw_output,
        exit_code: run.exit_code,
        produced_class_count,
        wall_time,
    })
}
