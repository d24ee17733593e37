//! Compiler output parsing and error classification.
//!
//! Only `error:` lines are considered. Two message forms carry a payload
//! that drives repair and are matched structurally:
//!
//! ```text
//! error: package org.msr does not exist
//! error: unmappable character for encoding UTF8
//! ```
//!
//! Everything else is classified by substring against a [`PatternTable`],
//! falling back to [`Category::Other`].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;

use crate::tsv;

/// The shipped pattern table.
pub const DEFAULT_TAXONOMY: &str = include_str!("../resources/taxonomy.tsv");

macro_rules! categories {
    ($($variant:ident => $name:literal,)*) => {
        /// Closed error taxonomy. The first twenty variants follow the
        /// ranking of the most frequent failure causes; `Other` is the sink.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Category {
            $($variant,)*
        }

        impl Category {
            pub const ALL: &'static [Category] = &[$(Category::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Category::$variant => $name,)*
                }
            }
        }

        impl FromStr for Category {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(Category::$variant),)*
                    _ => Err(format!("unknown category `{s}`")),
                }
            }
        }
    };
}

categories! {
    CannotFindSymbol => "cannot_find_symbol",
    MissingPackage => "missing_package",
    ResolverMissingPackages => "resolver_missing_packages",
    OverrideError => "override_error",
    DuplicateClass => "duplicate_class",
    StaticImportError => "static_import_error",
    UnmappableCharacter => "unmappable_character",
    ExpectedSymbol => "expected_symbol",
    IllegalAccess => "illegal_access",
    TooManyEncodings => "too_many_encodings",
    IncompatibleTypes => "incompatible_types",
    IllegalUse => "illegal_use",
    CannotBeApplied => "cannot_be_applied",
    NoSuitableDefinition => "no_suitable_definition",
    ClassOwnFile => "class_own_file",
    AbstractionError => "abstraction_error",
    NotAStatement => "not_a_statement",
    EofWhileParsing => "eof_while_parsing",
    InvalidMethodDecl => "invalid_method_decl",
    TooManyParameters => "too_many_parameters",
    Other => "other",
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub category: Category,
    pub file: Option<String>,
    pub line_no: Option<u32>,
    /// Package name for `MissingPackage`, encoding name for
    /// `UnmappableCharacter`.
    pub payload: Option<String>,
    /// The output line this diagnostic came from.
    pub raw: String,
}

impl Diagnostic {
    /// A diagnostic raised by the pipeline itself rather than the compiler.
    pub fn synthetic(category: Category, message: &str) -> Self {
        Diagnostic {
            category,
            file: None,
            line_no: None,
            payload: None,
            raw: format!("error: {message}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("taxonomy line {line}: {message}")]
pub struct TaxonomyError {
    pub line: usize,
    pub message: String,
}

/// Ordered `category -> substring` rules; first match wins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternTable {
    rules: Vec<(Category, String)>,
}

static ERROR_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*(?:\[javac\]\s*)?(?:(?P<file>[^\s:][^:]*?):(?P<line>\d+):\s*)?error:\s*(?P<msg>.*?)\s*$").unwrap()
});
static MISSING_PACKAGE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^package (?P<pkg>[^\s.]+(?:\.[^\s.]+)*) does not exist").unwrap());
static UNMAPPABLE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^unmappable character(?: \(0x[0-9A-Fa-f]+\))? for encoding (?P<enc>\S+)").unwrap()
});

impl Default for PatternTable {
    fn default() -> Self {
        PatternTable::parse(DEFAULT_TAXONOMY).expect("shipped taxonomy parses")
    }
}

impl PatternTable {
    pub fn parse(text: &str) -> Result<Self, TaxonomyError> {
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| TaxonomyError { line: i + 1, message };
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (cat, pattern) = line
                .split_once('\t')
                .ok_or_else(|| err("expected `category<TAB>pattern`".into()))?;
            let category: Category = cat.parse().map_err(err)?;
            if category == Category::MissingPackage {
                return Err(err("missing_package is matched structurally and cannot be a table rule".into()));
            }
            if pattern.is_empty() {
                return Err(err("empty pattern".into()));
            }
            rules.push((category, pattern.to_owned()));
        }
        Ok(PatternTable { rules })
    }

    pub fn rules(&self) -> &[(Category, String)] {
        &self.rules
    }

    /// Classifies the message text that follows `error:`.
    pub fn classify_message(&self, msg: &str) -> (Category, Option<String>) {
        if let Some(c) = MISSING_PACKAGE.captures(msg) {
            return (Category::MissingPackage, Some(c["pkg"].to_owned()));
        }
        if let Some(c) = UNMAPPABLE.captures(msg) {
            return (Category::UnmappableCharacter, Some(c["enc"].to_owned()));
        }
        let category = self
            .rules
            .iter()
            .find(|(_, pat)| msg.contains(pat.as_str()))
            .map_or(Category::Other, |(c, _)| *c);
        (category, None)
    }

    pub fn parse_line(&self, line: &str) -> Option<Diagnostic> {
        let caps = ERROR_LINE.captures(line)?;
        let (category, payload) = self.classify_message(&caps["msg"]);
        Some(Diagnostic {
            category,
            file: caps.name("file").map(|m| m.as_str().to_owned()),
            line_no: caps.name("line").and_then(|m| m.as_str().parse().ok()),
            payload,
            raw: line.trim_end_matches('\r').to_owned(),
        })
    }

    pub fn parse_output(&self, raw: &str) -> Vec<Diagnostic> {
        raw.lines().filter_map(|l| self.parse_line(l)).collect()
    }
}

/// [`PatternTable::parse_output`] with the shipped table.
pub fn parse_output(raw: &str) -> Vec<Diagnostic> {
    static TABLE: LazyLock<PatternTable> = LazyLock::new(PatternTable::default);
    TABLE.parse_output(raw)
}

/// Missing package names in first-occurrence order, verbatim.
pub fn extract_missing_packages(diags: &[Diagnostic]) -> Vec<String> {
    let mut seen = HashSet::new();
    diags
        .iter()
        .filter(|d| d.category == Category::MissingPackage)
        .filter_map(|d| d.payload.as_deref())
        .filter(|p| seen.insert(*p))
        .map(str::to_owned)
        .collect()
}

fn zeroed() -> BTreeMap<Category, usize> {
    Category::ALL.iter().map(|c| (*c, 0)).collect()
}

/// Number of projects showing each category at least once.
pub fn classify_histogram<'a, I>(projects: I) -> BTreeMap<Category, usize>
where
    I: IntoIterator<Item = &'a [Diagnostic]>,
{
    let mut counts = zeroed();
    for diags in projects {
        let cats: BTreeSet<Category> = diags.iter().map(|d| d.category).collect();
        for c in cats {
            *counts.get_mut(&c).expect("all categories present") += 1;
        }
    }
    counts
}

/// Number of diagnostics per category.
pub fn instance_histogram<'a, I>(projects: I) -> BTreeMap<Category, usize>
where
    I: IntoIterator<Item = &'a [Diagnostic]>,
{
    let mut counts = zeroed();
    for d in projects.into_iter().flatten() {
        *counts.get_mut(&d.category).expect("all categories present") += 1;
    }
    counts
}

/// `category\tfile\tline\tpayload\traw` per diagnostic.
pub fn render_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| {
            tsv::row([
                d.category.as_str(),
                d.file.as_deref().unwrap_or(""),
                &d.line_no.map(|n| n.to_string()).unwrap_or_default(),
                d.payload.as_deref().unwrap_or(""),
                &d.raw,
            ])
        })
        .collect()
}

pub fn parse_diagnostics(text: &str) -> Result<Vec<Diagnostic>, TaxonomyError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |message: String| TaxonomyError { line: i + 1, message };
        let cols: Vec<&str> = line.split('\t').collect();
        let [cat, file, line_no, payload, raw] = cols[..] else {
            return Err(err(format!("expected 5 columns, found {}", cols.len())));
        };
        let opt = |s: &str| (!s.is_empty()).then(|| tsv::unfield(s));
        out.push(Diagnostic {
            category: cat.parse().map_err(err)?,
            file: opt(file),
            line_no: match line_no {
                "" => None,
                n => Some(n.parse().map_err(|_| err(format!("bad line number `{n}`")))?),
            },
            payload: opt(payload),
            raw: tsv::unfield(raw),
        });
    }
    Ok(out)
}
