#![allow(dead_code)]

use std::fs;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jbf_cli::{AdapterKind, Flags, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zip::write::SimpleFileOptions;

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, bytes).unwrap();
}

pub fn jar_with(entries: &[(&str, &[u8])]) -> Vec<u8> {
    let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
    let opts = SimpleFileOptions::default()
        .compression_method(zip::CompressionMethod::Stored)
        .last_modified_time(zip::DateTime::default());
    for (name, data) in entries {
        w.start_file(*name, opts).unwrap();
        w.write_all(data).unwrap();
    }
    w.finish().unwrap().into_inner()
}

/// Archive with a manifest and one class entry per type name.
pub fn jar_of_types(types: &[&str]) -> Vec<u8> {
    let names: Vec<String> = types.iter().map(|t| format!("{}.class", t.replace('.', "/"))).collect();
    let mut entries: Vec<(&str, &[u8])> = vec![("META-INF/MANIFEST.MF", b"Manifest-Version: 1.0\r\n\r\n")];
    entries.extend(names.iter().map(|n| (n.as_str(), &b"\xCA\xFE\xBA\xBE"[..])));
    jar_with(&entries)
}

pub fn uci_irv() -> Vec<u8> {
    jar_with(&[
        ("META-INF/MANIFEST.MF", b"Manifest-Version: 1.0\r\n\r\n"),
        ("edu/uci/ics/algo.class", b"\xCA\xFE\xBA\xBE"),
        ("edu/uci/econ.class", b"\xCA\xFE\xBA\xBE"),
    ])
}

fn fixture(corpus: &Path, id: &str, manifest: &str, sources: &[(&str, &[u8])]) -> PathBuf {
    let dir = corpus.join(id);
    for (rel, bytes) in sources {
        write(&dir.join(rel), bytes);
    }
    write(&dir.join("jbf-fixture.manifest"), manifest);
    dir
}

const PLAIN: &[u8] = b"package app;\npublic class Main { public static void main(String[] a) {} }\n";
const LATIN: &[u8] = b"package app;\nclass Caf\xe9 { String s = \"na\xefve r\xe9sum\xe9\"; }\n";

/// Expected status of each golden fixture project.
pub const GOLDEN: &[(&str, &str)] = &[
    ("dep-commons", "success_round2"),
    ("dep-json", "success_round2"),
    ("dep-msr", "success_round2"),
    ("enc-mixed", "success_round2"),
    ("enc-nested", "success_round2"),
    ("enc-single", "success_round2"),
    ("fail-always", "fail"),
    ("fail-unresolvable", "fail"),
    ("r1-commons-host", "success_round1"),
    ("r1-hello", "success_round1"),
    ("r1-json-host", "success_round1"),
    ("r1-msr-host", "success_round1"),
];

/// Twelve scripted projects: four build as-is (three of them carry the jars
/// others need), three need only an encoding, three need only jars from
/// elsewhere in the corpus, and two can never build.
pub fn golden_corpus(corpus: &Path) {
    fixture(corpus, "r1-hello", "", &[("src/app/Main.java", PLAIN)]);
    let host = fixture(corpus, "r1-msr-host", "", &[("src/app/Main.java", PLAIN)]);
    write(&host.join("lib/msr-parser.jar"), jar_of_types(&["org.msr.Parser", "org.msr.ast.Node"]));
    let host = fixture(corpus, "r1-json-host", "source src/app/Main.java\n", &[("src/app/Main.java", PLAIN)]);
    write(&host.join("libs/json.jar"), jar_of_types(&["org.json.JSONObject", "org.json.util.Pretty$Inner"]));
    let host = fixture(corpus, "r1-commons-host", "", &[("Main.java", PLAIN)]);
    write(
        &host.join("third_party/commons.JAR"),
        jar_of_types(&["org.apache.commons.lang.StringUtils", "org.apache.commons.io.FileUtils"]),
    );

    fixture(corpus, "enc-single", "require-encoding windows-1252\n", &[("src/app/Cafe.java", LATIN)]);
    fixture(
        corpus,
        "enc-mixed",
        "require-encoding windows-1252\n",
        &[("src/app/Main.java", PLAIN), ("src/app/Cafe.java", LATIN)],
    );
    fixture(
        corpus,
        "enc-nested",
        "require-encoding windows-1252\n",
        &[
            ("a/b/c/Deep.java", b"class Deep { char c = '\x93'; }\n"),
            ("a/Top.java", b"class Top { String s = \"\xab quoted \xbb\"; }\n"),
        ],
    );

    fixture(
        corpus,
        "dep-msr",
        "require-package org.msr\n",
        &[("src/Use.java", b"import org.msr.*;\nclass Use {}\n")],
    );
    fixture(
        corpus,
        "dep-json",
        "require-package org.json\nrequire-package org.json.util\n",
        &[("src/Use.java", b"import org.json.*;\nimport org.json.util.*;\nclass Use {}\n")],
    );
    fixture(
        corpus,
        "dep-commons",
        "require-package org.apache.commons.lang\nrequire-package org.apache.commons.io\n",
        &[("src/Use.java", b"import org.apache.commons.lang.*;\nclass Use {}\n")],
    );

    fixture(
        corpus,
        "fail-unresolvable",
        "require-package com.nowhere.missing\n",
        &[("src/Use.java", b"import com.nowhere.missing.*;\nclass Use {}\n")],
    );
    fixture(
        corpus,
        "fail-always",
        "always-error src/Broken.java:3: error: cannot find symbol\n",
        &[("src/Broken.java", b"class Broken { Foo f; }\n")],
    );
}

/// `n` projects with 1..=60 sources each; the chance that a project carries
/// an unconditional error grows linearly with its source count.
pub fn synthetic_corpus(corpus: &Path, n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n {
        let files = rng.gen_range(1..=60usize);
        let p_fail = 0.1 + 0.8 * (files - 1) as f64 / 59.0;
        let manifest = if rng.gen_bool(p_fail) {
            "always-error src/S0.java:1: error: cannot find symbol\n"
        } else {
            ""
        };
        let dir = corpus.join(format!("s{i:05}"));
        for f in 0..files {
            write(&dir.join(format!("src/S{f}.java")), format!("class S{f} {{}}\n"));
        }
        write(&dir.join("jbf-fixture.manifest"), manifest);
    }
}

pub fn config(corpus: Option<&Path>, out: &Path, workers: usize) -> RunConfig {
    RunConfig::resolve(&Flags {
        corpus: corpus.map(Path::to_path_buf),
        out: Some(out.to_path_buf()),
        workers: Some(workers),
        adapter: Some(AdapterKind::Fake),
        ..Flags::default()
    })
    .unwrap()
}

pub fn jbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jbf"))
        .args(args)
        .env_remove("JBF_WORKERS")
        .output()
        .unwrap()
}

/// `outcomes.tsv` without its wall-time column.
pub fn outcomes_without_time(out: &Path) -> String {
    fs::read_to_string(out.join("outcomes.tsv"))
        .unwrap()
        .lines()
        .map(|l| {
            let mut cols: Vec<&str> = l.split('\t').collect();
            cols.truncate(5);
            cols.join("\t") + "\n"
        })
        .collect()
}

/// Relative path and contents of every build file under `out/projects`.
pub fn build_files(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = walk(&out.join("projects"))
        .into_iter()
        .filter(|p| p.file_name().is_some_and(|n| n == "build.xml" || n == "plan.txt" || n == "command.txt"))
        .map(|p| (p.strip_prefix(out).unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let Ok(entries) = fs::read_dir(dir) else { return out };
    for e in entries.flatten() {
        let p = e.path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}
