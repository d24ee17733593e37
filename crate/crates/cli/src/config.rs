//! Run configuration: an optional TOML file overlaid by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;

use jbf_core::report::DEFAULT_BIN_COUNT;

pub const WORKERS_ENV: &str = "JBF_WORKERS";
pub const DEFAULT_OUT: &str = "jbf-out";
pub const DEFAULT_TIMEOUT_S: u64 = 300;
pub const STORE_DIR: &str = "store";
pub const INDEX_FILE: &str = "fqnindex.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdapterKind {
    /// An installed javac.
    Real,
    /// The fixture-manifest compiler.
    Fake,
}

/// Keys accepted in a `--config` file. Relative paths are taken relative to
/// the file's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub store: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub adapter: Option<AdapterKind>,
    pub timeout_s: Option<u64>,
    pub bins: Option<usize>,
    pub always_round2: Option<bool>,
    #[serde(default)]
    pub seed_dirs: Vec<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.corpus, &mut cfg.store, &mut cfg.index, &mut cfg.out].into_iter().flatten() {
            *p = base.join(&*p);
        }
        for d in &mut cfg.seed_dirs {
            *d = base.join(&*d);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML file with defaults for any of the options below.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory whose immediate subdirectories are projects.
    #[arg(long, global = true, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    /// Jar store [default: <out>/store].
    #[arg(long, global = true, value_name = "DIR")]
    pub store: Option<PathBuf>,
    /// FQN index file [default: <store>/fqnindex.tsv].
    #[arg(long, global = true, value_name = "FILE")]
    pub index: Option<PathBuf>,
    /// Output directory [default: jbf-out].
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Parallel builds [default: $JBF_WORKERS, else available cores].
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub adapter: Option<AdapterKind>,
    /// Per-round compiler timeout in seconds [default: 300].
    #[arg(long = "timeout-s", global = true, value_name = "N")]
    pub timeout_s: Option<u64>,
    /// Bins per metric in the report [default: 50].
    #[arg(long, global = true, value_name = "N")]
    pub bins: Option<usize>,
    /// Recompile even when repair changed nothing.
    #[arg(long = "always-round2", global = true)]
    pub always_round2: bool,
    /// Extra directory of archives to add to the store (repeatable).
    #[arg(long = "seed-dir", global = true, value_name = "DIR")]
    pub seed_dirs: Vec<PathBuf>,
}

/// Fully resolved settings for one invocation; every path is absolute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub corpus_root: Option<PathBuf>,
    pub store_root: PathBuf,
    pub index_path: PathBuf,
    pub output_root: PathBuf,
    pub workers: usize,
    pub adapter: AdapterKind,
    pub timeout_s: u64,
    pub bin_count: usize,
    pub always_round2: bool,
    pub seed_dirs: Vec<PathBuf>,
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).with_context(|| format!("cannot resolve path {}", p.display()))
}

fn env_workers() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .with_context(|| format!("{WORKERS_ENV}={v} is not a worker count")),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => bail!("{WORKERS_ENV}: {e}"),
    }
}

impl RunConfig {
    /// Flags win over the config file, which wins over `JBF_WORKERS` and
    /// built-in defaults.
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let output_root = absolute(flags.out.as_ref().or(file.out.as_ref()).map_or(Path::new(DEFAULT_OUT), |p| p))?;
        let store_root = match flags.store.as_ref().or(file.store.as_ref()) {
            Some(p) => absolute(p)?,
            None => output_root.join(STORE_DIR),
        };
        let index_path = match flags.index.as_ref().or(file.index.as_ref()) {
            Some(p) => absolute(p)?,
            None => store_root.join(INDEX_FILE),
        };
        let corpus_root = flags.corpus.as_ref().or(file.corpus.as_ref()).map(|p| absolute(p)).transpose()?;
        let workers = match flags.workers.or(file.workers) {
            Some(n) => n,
            None => env_workers()?.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        };
        let seed_dirs = if flags.seed_dirs.is_empty() { &file.seed_dirs } else { &flags.seed_dirs };

        let cfg = RunConfig {
            corpus_root,
            store_root,
            index_path,
            output_root,
            workers,
            adapter: flags.adapter.or(file.adapter).unwrap_or(AdapterKind::Real),
            timeout_s: flags.timeout_s.or(file.timeout_s).unwrap_or(DEFAULT_TIMEOUT_S),
            bin_count: flags.bins.or(file.bins).unwrap_or(DEFAULT_BIN_COUNT),
            always_round2: flags.always_round2 || file.always_round2.unwrap_or(false),
            seed_dirs: seed_dirs.iter().map(|d| absolute(d)).collect::<Result<_>>()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        if self.timeout_s == 0 {
            bail!("timeout must be positive");
        }
        if self.bin_count < 2 {
            bail!("bin count must be at least 2");
        }
        Ok(())
    }

    pub fn corpus(&self) -> Result<&Path> {
        self.corpus_root
            .as_deref()
            .context("no corpus given; pass --corpus DIR or set `corpus` in the config file")
    }
}
