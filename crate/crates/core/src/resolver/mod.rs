//! Repair of failed builds.
//!
//! Missing packages are mapped to archives by greedy maximum coverage: pick
//! the archive whose index keys match the most still-missing names, remove
//! them, repeat. The project's own archives are exhausted first, then the
//! global index. Names are looked up exactly as the compiler reported them.

pub mod encoding;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::diagnostics::{Category, Diagnostic};
use crate::fqnindex::FqnIndex;
use crate::jarstore::JarId;
use crate::tsv;

pub use encoding::{detect_encoding, Encoding, EncodingError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Local,
    Global,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Local => "local",
            Source::Global => "global",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why one archive is on the classpath.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub jar_id: JarId,
    /// In the order the names were reported missing.
    pub covered: Vec<String>,
    pub source: Source,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResolutionPlan {
    /// Store paths in selection order.
    pub classpath: Vec<String>,
    pub encoding: Option<Encoding>,
    pub unresolved: Vec<String>,
    pub provenance: Vec<Provenance>,
    /// Repair failures: unresolved packages, conflicting encodings.
    pub errors: Vec<Diagnostic>,
}

impl ResolutionPlan {
    pub fn is_empty(&self) -> bool {
        self.classpath.is_empty() && self.encoding.is_none()
    }

    /// `fqn\tjar_id\tlocal|global`, one row per covered name.
    pub fn render_provenance(&self) -> String {
        self.provenance
            .iter()
            .flat_map(|p| {
                p.covered
                    .iter()
                    .map(move |fqn| tsv::row([fqn.as_str(), p.jar_id.as_str(), p.source.as_str()]))
            })
            .collect()
    }

    pub fn jar_ids(&self) -> impl Iterator<Item = &JarId> {
        self.provenance.iter().map(|p| &p.jar_id)
    }
}

/// One greedy maximum-cover pass over `candidates`.
///
/// `coverage` maps each candidate jar to the indices (into `remaining`'s
/// universe) it can cover. Covered indices are removed from `remaining`.
fn greedy_pass(
    coverage: &BTreeMap<JarId, BTreeSet<usize>>,
    remaining: &mut BTreeSet<usize>,
) -> Vec<(JarId, BTreeSet<usize>)> {
    let mut picks = Vec::new();
    loop {
        let mut best: Option<(&JarId, BTreeSet<usize>)> = None;
        // ascending jar id, strict improvement: ties go to the smallest id
        for (jar, covers) in coverage {
            let hits: BTreeSet<usize> = covers.intersection(remaining).copied().collect();
            if hits.is_empty() {
                continue;
            }
            if best.as_ref().is_none_or(|(_, b)| hits.len() > b.len()) {
                best = Some((jar, hits));
            }
        }
        let Some((jar, hits)) = best else { break };
        for i in &hits {
            remaining.remove(i);
        }
        picks.push((jar.clone(), hits));
    }
    picks
}

/// Maps missing package names to archives, project archives first.
pub fn resolve_dependencies(missing: &[String], local_jars: &[JarId], index: &FqnIndex) -> ResolutionPlan {
    let mut seen = HashSet::new();
    let missing: Vec<&str> = missing.iter().map(String::as_str).filter(|m| seen.insert(*m)).collect();
    let local: BTreeSet<&JarId> = local_jars.iter().collect();

    let mut local_cov: BTreeMap<JarId, BTreeSet<usize>> = BTreeMap::new();
    let mut global_cov: BTreeMap<JarId, BTreeSet<usize>> = BTreeMap::new();
    for (i, fqn) in missing.iter().enumerate() {
        for jar in index.query(fqn) {
            if local.contains(jar) {
                local_cov.entry(jar.clone()).or_default().insert(i);
            }
            global_cov.entry(jar.clone()).or_default().insert(i);
        }
    }

    let mut remaining: BTreeSet<usize> = (0..missing.len()).collect();
    let mut plan = ResolutionPlan::default();
    for (coverage, source) in [(&local_cov, Source::Local), (&global_cov, Source::Global)] {
        for (jar_id, hits) in greedy_pass(coverage, &mut remaining) {
            plan.classpath.push(jar_id.store_path());
            plan.provenance.push(Provenance {
                jar_id,
                covered: hits.iter().map(|&i| missing[i].to_owned()).collect(),
                source,
            });
        }
    }
    plan.unresolved = remaining.iter().map(|&i| missing[i].to_owned()).collect();
    if !plan.unresolved.is_empty() {
        plan.errors.push(Diagnostic::synthetic(
            Category::ResolverMissingPackages,
            &format!("Missing package error: {}", plan.unresolved.join(", ")),
        ));
    }
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fqnindex::IndexBuilder;

    fn jar(n: u8) -> JarId {
        JarId::of_bytes(&[n])
    }

    fn index(jars: &[(&JarId, &[&str])]) -> FqnIndex {
        let mut b = IndexBuilder::new();
        for (id, types) in jars {
            let types: Vec<String> = types.iter().map(|s| s.to_string()).collect();
            b.add_jar(id, &types);
        }
        b.build()
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empty_missing_gives_empty_plan() {
        let plan = resolve_dependencies(&[], &[], &FqnIndex::default());
        assert_eq!(plan, ResolutionPlan::default());
        assert!(plan.is_empty());
    }

    #[test]
    fn one_jar_covers_all_ten() {
        let j = jar(1);
        let types: Vec<String> = (0..10).map(|i| format!("p{i}.sub.T")).collect();
        let refs: Vec<&str> = types.iter().map(String::as_str).collect();
        let other = jar(2);
        let idx = index(&[(&j, &refs), (&other, &["p0.sub.T"])]);
        let missing: Vec<String> = (0..10).map(|i| format!("p{i}.sub")).collect();
        let plan = resolve_dependencies(&missing, &[], &idx);
        assert_eq!(plan.classpath, [j.store_path()]);
        assert!(plan.unresolved.is_empty());
        assert!(plan.errors.is_empty());
    }

    #[test]
    fn eight_then_two() {
        let big = jar(1);
        let small = jar(2);
        let big_types: Vec<String> = (0..8).map(|i| format!("p{i}.T")).collect();
        let big_refs: Vec<&str> = big_types.iter().map(String::as_str).collect();
        let idx = index(&[(&big, &big_refs), (&small, &["p8.T", "p9.T"])]);
        let missing: Vec<String> = (0..10).map(|i| format!("p{i}.T")).collect();
        let plan = resolve_dependencies(&missing, &[], &idx);
        assert_eq!(plan.classpath, [big.store_path(), small.store_path()]);
        assert_eq!(plan.provenance[0].covered.len(), 8);
        assert_eq!(plan.provenance[1].covered, names(&["p8.T", "p9.T"]));
    }

    #[test]
    fn picks_the_single_covering_jar() {
        let (j1, j2, j3) = (jar(1), jar(2), jar(3));
        let idx = index(&[(&j1, &["a.b"]), (&j2, &["a.b", "c.d"]), (&j3, &["c.d"])]);
        let plan = resolve_dependencies(&names(&["a.b", "c.d"]), &[], &idx);
        assert_eq!(plan.classpath, [j2.store_path()]);
    }

    #[test]
    fn ties_go_to_smallest_jar_id() {
        let (a, b) = (jar(1), jar(2));
        let idx = index(&[(&a, &["x.Y"]), (&b, &["x.Y"])]);
        let plan = resolve_dependencies(&names(&["x.Y"]), &[], &idx);
        assert_eq!(plan.provenance[0].jar_id, a.clone().min(b));
    }

    #[test]
    fn no_reduction_on_lookup() {
        let j = jar(1);
        let idx = index(&[(&j, &["edu.uci.ics.algo"])]);
        // a deeper name than anything indexed is not reduced to a prefix
        let plan = resolve_dependencies(&names(&["edu.uci.ics.algo.Inner", "edu.uci"]), &[], &idx);
        assert_eq!(plan.unresolved, names(&["edu.uci.ics.algo.Inner"]));
        assert_eq!(plan.classpath.len(), 1);
        assert_eq!(plan.errors.len(), 1);
        assert_eq!(plan.errors[0].category, Category::ResolverMissingPackages);
    }

    #[test]
    fn local_jars_take_priority() {
        let (global, local) = (jar(1), jar(2));
        let idx = index(&[(&global, &["a.B", "c.D"]), (&local, &["a.B"])]);
        let plan = resolve_dependencies(&names(&["a.B", "c.D"]), std::slice::from_ref(&local), &idx);
        assert_eq!(plan.provenance[0].jar_id, local);
        assert_eq!(plan.provenance[0].source, Source::Local);
        assert_eq!(plan.provenance[1].covered, names(&["c.D"]));
        assert_eq!(plan.provenance[1].source, Source::Global);
        assert_eq!(
            plan.render_provenance(),
            format!("a.B\t{local}\tlocal\nc.D\t{global}\tglobal\n")
        );
    }

    #[test]
    fn duplicate_missing_names_collapse() {
        let j = jar(1);
        let idx = index(&[(&j, &["a.B"])]);
        let plan = resolve_dependencies(&names(&["a.B", "a.B"]), &[], &idx);
        assert_eq!(plan.provenance[0].covered, names(&["a.B"]));
    }
}
