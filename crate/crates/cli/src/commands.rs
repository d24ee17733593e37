use std::fs;
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use log::info;

use jbf_core::corpus::{partition_android, scan_corpus};
use jbf_core::fqnindex::build_index;
use jbf_core::jarstore::{self, collect_jars_with_seeds, read_manifest, write_manifest};
use jbf_core::pipeline::{load_records, write_run_tables, Pipeline, OUTCOMES_FILE};
use jbf_core::report::{corpus_stats, CountingMode, Metric};
use jbf_core::{CompilerAdapter, FakeCompiler, FqnIndex, JarEntry, JavacCompiler, PipelineOptions, SignatureStatus};

use crate::config::{AdapterKind, RunConfig};

pub const SCAN_FILE: &str = "scan.txt";
pub const REPORT_DIR: &str = "report";

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// Scans the corpus and harvests its archives into the store.
pub fn cmd_scan(cfg: &RunConfig) -> Result<String> {
    let corpus = cfg.corpus()?;
    let scan = scan_corpus(corpus)?;
    let collection = collect_jars_with_seeds(&scan.records, &cfg.seed_dirs, &cfg.store_root)?;
    write_manifest(&cfg.store_root, &collection.entries)?;

    let count = |s: SignatureStatus| collection.entries.iter().filter(|e| e.signature_status == s).count();
    let summary = format!(
        "{}\njars={} ok={} invalid_digest={} unreadable={}\n",
        scan.summary,
        collection.entries.len(),
        count(SignatureStatus::Ok),
        count(SignatureStatus::InvalidDigest),
        count(SignatureStatus::Unreadable),
    );
    write(&cfg.output_root.join(SCAN_FILE), &summary)?;
    let mut msg = summary;
    msg.push_str(&format!("copied {} new archives into {}\n", collection.copied, cfg.store_root.display()));
    if scan.summary.skipped_unreadable > 0 {
        msg.push_str(&format!("skipped {} unreadable project directories\n", scan.summary.skipped_unreadable));
    }
    Ok(msg)
}

/// Builds the FQN index over the store's accepted archives.
pub fn cmd_index(cfg: &RunConfig) -> Result<String> {
    if !cfg.store_root.is_dir() {
        bail!("jar store {} does not exist; run `jbf scan` first", cfg.store_root.display());
    }
    let rows = read_manifest(&cfg.store_root).with_context(|| {
        format!(
            "cannot read {}; run `jbf scan` first",
            cfg.store_root.join(jarstore::MANIFEST_FILE).display()
        )
    })?;
    let entries: Vec<JarEntry> = rows
        .into_iter()
        .map(|r| JarEntry {
            jar_id: r.jar_id,
            store_path: r.store_path,
            signature_status: r.signature_status,
            origins: Vec::new(),
        })
        .collect();
    let index = build_index(&cfg.store_root, &entries);
    if let Some(parent) = cfg.index_path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    index.persist(&cfg.index_path)?;
    Ok(format!(
        "indexed {} keys over {} jars into {}\n",
        index.key_count(),
        index.jar_count(),
        cfg.index_path.display()
    ))
}

fn adapter(cfg: &RunConfig) -> Result<Box<dyn CompilerAdapter>> {
    Ok(match cfg.adapter {
        AdapterKind::Fake => Box::new(FakeCompiler::new()),
        AdapterKind::Real => Box::new(
            JavacCompiler::locate(Duration::from_secs(cfg.timeout_s))
                .context("use --adapter fake for fixture corpora")?,
        ),
    })
}

/// Runs both compile rounds over every non-Android project.
pub fn cmd_build(cfg: &RunConfig) -> Result<String> {
    let corpus = cfg.corpus()?;
    let index = FqnIndex::load(&cfg.index_path)
        .with_context(|| format!("cannot load index {}; build it with `jbf index`", cfg.index_path.display()))?;
    let scan = scan_corpus(corpus)?;
    let (projects, android) = partition_android(scan.records);
    let adapter = adapter(cfg)?;
    info!(
        "building {} projects ({} Android projects excluded) with {} workers",
        projects.len(),
        android.len(),
        cfg.workers
    );

    let pipeline = Pipeline {
        index: &index,
        adapter: adapter.as_ref(),
        options: PipelineOptions {
            output_root: cfg.output_root.clone(),
            store_root: cfg.store_root.clone(),
            always_round2: cfg.always_round2,
        },
    };
    let outcomes = pipeline.run(&projects, cfg.workers);
    write_run_tables(&cfg.output_root, &outcomes)?;

    let count = |s| outcomes.iter().filter(|o| o.status == s).count();
    use jbf_core::OutcomeStatus::*;
    let mut msg = format!(
        "success_round1={} success_round2={} fail={} (outcomes in {})\n",
        count(SuccessRound1),
        count(SuccessRound2),
        count(Fail),
        cfg.output_root.join(OUTCOMES_FILE).display()
    );
    let internal = outcomes.iter().filter(|o| o.internal_error.is_some()).count();
    if internal > 0 {
        msg.push_str(&format!("{internal} projects failed with internal errors; see their output.txt\n"));
    }
    Ok(msg)
}

/// Files written by [`cmd_report`], relative to the report directory.
pub fn report_files() -> Vec<String> {
    let mut files: Vec<String> = ["summary.txt", "summary.tsv", "errors.tsv", "errors_per_instance.tsv"]
        .map(String::from)
        .to_vec();
    files.extend(Metric::ALL.iter().map(|m| format!("bins_{m}.tsv")));
    files
}

/// Computes the statistics of the last build into `<out>/report`.
pub fn cmd_report(cfg: &RunConfig) -> Result<String> {
    let records = load_records(&cfg.output_root)?;
    let stats = corpus_stats::<f64>(&records, cfg.bin_count, CountingMode::PerProject);
    let per_instance = corpus_stats::<f64>(&records, cfg.bin_count, CountingMode::PerInstance);
    let dir = cfg.output_root.join(REPORT_DIR);
    let summary = stats.text_summary();
    write(&dir.join("summary.txt"), &summary)?;
    write(&dir.join("summary.tsv"), stats.summary_tsv())?;
    write(&dir.join("errors.tsv"), stats.errors_tsv())?;
    write(&dir.join("errors_per_instance.tsv"), per_instance.errors_tsv())?;
    for m in Metric::ALL {
        write(&dir.join(format!("bins_{m}.tsv")), stats.bins_tsv(m))?;
    }
    Ok(summary)
}

/// scan, index, build and report in sequence.
pub fn cmd_all(cfg: &RunConfig) -> Result<String> {
    let mut msg = cmd_scan(cfg)?;
    msg.push_str(&cmd_index(cfg)?);
    msg.push_str(&cmd_build(cfg)?);
    msg.push_str(&cmd_report(cfg)?);
    Ok(msg)
}
