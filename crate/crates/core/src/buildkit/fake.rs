//! Deterministic stand-in for the JVM compiler.
//!
//! A fixture project carries `jbf-fixture.manifest`:
//!
//! ```text
//! require-package org.msr
//! require-encoding windows-1252
//! always-error src/A.java:3: error: cannot find symbol
//! source src/A.java
//! ```
//!
//! A run succeeds iff every required package is a key of some classpath
//! archive, the plan's encoding equals the required one, and there are no
//! `always-error` lines. Failures print javac-style error lines in manifest
//! order; successes write one placeholder class file per source.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use super::{javac_args, shell_join, AdapterError, BuildPlan, CompilerAdapter, RawRun};
use crate::fqnindex::{keys_of_types, list_types_bytes, FqnKey};
use crate::resolver::Encoding;

pub const FIXTURE_MANIFEST: &str = "jbf-fixture.manifest";

/// Bytes written for every placeholder class file.
const PLACEHOLDER_CLASS: &[u8] = &[0xCA, 0xFE, 0xBA, 0xBE, 0x00, 0x00, 0x00, 0x34];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Directive {
    RequirePackage(String),
    RequireEncoding(Encoding),
    AlwaysError(String),
    Source(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FixtureManifest {
    pub directives: Vec<Directive>,
}

impl FixtureManifest {
    pub fn parse(text: &str, path: &Path) -> Result<Self, AdapterError> {
        let mut directives = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| AdapterError::Fixture {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, rest) = line.split_once(' ').ok_or_else(|| err(format!("no argument in `{line}`")))?;
            let rest = rest.trim();
            if rest.is_empty() {
                return Err(err(format!("empty argument for `{word}`")));
            }
            directives.push(match word {
                "require-package" => Directive::RequirePackage(rest.to_owned()),
                "require-encoding" => Directive::RequireEncoding(rest.parse().map_err(err)?),
                "always-error" => Directive::AlwaysError(rest.to_owned()),
                "source" => Directive::Source(rest.to_owned()),
                other => return Err(err(format!("unknown directive `{other}`"))),
            });
        }
        Ok(FixtureManifest { directives })
    }

    /// Reads the manifest of a project; a project without one has no requirements.
    pub fn load(source_root: &Path) -> Result<Self, AdapterError> {
        let path = source_root.join(FIXTURE_MANIFEST);
        match fs::read_to_string(&path) {
            Ok(text) => Self::parse(&text, &path),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(AdapterError::io(path.display(), e)),
        }
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.directives.iter().filter_map(|d| match d {
            Directive::Source(s) => Some(s.as_str()),
            _ => None,
        })
    }

    pub fn render(&self) -> String {
        self.directives
            .iter()
            .map(|d| match d {
                Directive::RequirePackage(p) => format!("require-package {p}\n"),
                Directive::RequireEncoding(e) => format!("require-encoding {e}\n"),
                Directive::AlwaysError(l) => format!("always-error {l}\n"),
                Directive::Source(s) => format!("source {s}\n"),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct FakeCompiler;

impl FakeCompiler {
    pub fn new() -> Self {
        FakeCompiler
    }

    fn classpath_keys(plan: &BuildPlan) -> BTreeSet<FqnKey> {
        let mut keys = BTreeSet::new();
        for cp in &plan.classpath {
            match fs::read(cp).map_err(|e| e.to_string()).and_then(|b| list_types_bytes(&b).map_err(|e| e.to_string())) {
                Ok(types) => keys.extend(keys_of_types(&types)),
                Err(err) => warn!("fake compiler cannot read classpath entry {}: {err}", cp.display()),
            }
        }
        keys
    }

    /// Error lines for a plan, empty when it would compile.
    pub fn check(manifest: &FixtureManifest, plan: &BuildPlan, location: &str) -> Vec<String> {
        let keys = Self::classpath_keys(plan);
        let mut errors = Vec::new();
        for d in &manifest.directives {
            match d {
                Directive::RequirePackage(p) => {
                    let found = p.parse::<FqnKey>().is_ok_and(|k| keys.contains(&k));
                    if !found {
                        errors.push(format!("{location}: error: package {p} does not exist"));
                    }
                }
                Directive::RequireEncoding(want) => {
                    if plan.encoding != Some(*want) {
                        let used = plan.encoding.map_or("UTF8".to_owned(), |e| e.as_str().to_owned());
                        errors.push(format!("{location}: error: unmappable character for encoding {used}"));
                    }
                }
                Directive::AlwaysError(line) => errors.push(line.clone()),
                Directive::Source(_) => {}
            }
        }
        errors
    }
}

impl CompilerAdapter for FakeCompiler {
    fn name(&self) -> &str {
        "fake"
    }

    fn run(&self, plan: &BuildPlan, sources: &[PathBuf]) -> Result<RawRun, AdapterError> {
        let manifest = FixtureManifest::load(&plan.source_root)?;
        let args = javac_args(plan, true);
        let command = shell_join(std::iter::once("fake-javac").chain(args.iter().map(String::as_str)));

        let declared: Vec<PathBuf> = manifest.sources().map(PathBuf::from).collect();
        let rel_sources: Vec<PathBuf> = if declared.is_empty() {
            sources
                .iter()
                .map(|s| s.strip_prefix(&plan.source_root).unwrap_or(s).to_path_buf())
                .collect()
        } else {
            declared
        };
        let location = rel_sources
            .first()
            .map(|s| format!("{}:1", plan.source_root.join(s).display()))
            .unwrap_or_else(|| "<no source>:1".to_owned());

        let errors = Self::check(&manifest, plan, &location);
        if !errors.is_empty() {
            let n = errors.len();
            let mut output = errors.join("\n");
            output.push_str(&format!("\n{n} error{}\n", if n == 1 { "" } else { "s" }));
            return Ok(RawRun {
                command,
                exit_code: Some(1),
                output,
                timed_out: false,
            });
        }

        let out = plan.output_dir();
        for rel in &rel_sources {
            let class = out.join(rel).with_extension("class");
            if let Some(parent) = class.parent() {
                fs::create_dir_all(parent).map_err(|e| AdapterError::io(parent.display(), e))?;
            }
            fs::write(&class, PLACEHOLDER_CLASS).map_err(|e| AdapterError::io(class.display(), e))?;
        }
        Ok(RawRun {
            command,
            exit_code: Some(0),
            output: String::new(),
            timed_out: false,
        })
    }
}
