mod common;

use std::collections::BTreeSet;

use jbf_core::fqnindex::{build_index, expand_prefixes, list_types_bytes, IndexBuilder, IndexError};
use jbf_core::jarstore::collect_jars;
use jbf_core::{FqnIndex, JarId};
use proptest::prelude::*;

use common::{jar_of_types, jar_with, project, write};

fn uci_irv() -> Vec<u8> {
    jar_with(&[
        ("META-INF/MANIFEST.MF", b"Manifest-Version: 1.0\r\n\r\n"),
        ("edu/uci/ics/algo.class", b"\xCA\xFE\xBA\xBE"),
        ("edu/uci/econ.class", b"\xCA\xFE\xBA\xBE"),
    ])
}

fn index_of(jars: &[Vec<u8>]) -> (FqnIndex, Vec<JarId>) {
    let mut b = IndexBuilder::new();
    let mut ids = Vec::new();
    for bytes in jars {
        let id = JarId::of_bytes(bytes);
        b.add_jar(&id, &list_types_bytes(bytes).unwrap());
        ids.push(id);
    }
    (b.build(), ids)
}

#[test]
fn uci_irv_listing() {
    let jar = uci_irv();
    let types = list_types_bytes(&jar).unwrap();
    assert_eq!(types, BTreeSet::from(["edu.uci.ics.algo".to_owned(), "edu.uci.econ".to_owned()]));

    let (index, ids) = index_of(&[jar]);
    let keys: Vec<&str> = index.iter().map(|(k, _)| k.as_str()).collect();
    assert_eq!(keys, ["edu.uci", "edu.uci.econ", "edu.uci.ics", "edu.uci.ics.algo"]);
    for (_, posting) in index.iter() {
        assert_eq!(posting, &ids[..]);
    }
    assert!(index.query("edu").is_empty());
    assert!(index.query("edu.uci.nothere").is_empty());
}

#[test]
fn second_jar_intersects_at_edu_uci() {
    let psico = jar_of_types(&["edu.uci.psico"]);
    let (index, ids) = index_of(&[uci_irv(), psico]);
    let mut both = ids.clone();
    both.sort();
    assert_eq!(index.query("edu.uci"), &both[..]);
    assert_eq!(index.query("edu.uci.psico"), &ids[1..]);
    assert_eq!(index.query("edu.uci.ics"), &ids[..1]);
    assert_eq!(index.key_count(), 5);
}

#[test]
fn persist_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (index, _) = index_of(&[uci_irv(), jar_of_types(&["edu.uci.psico", "org.a.B$Inner"])]);
    let path = dir.path().join("fqnindex.tsv");
    index.persist(&path).unwrap();
    let loaded = FqnIndex::load(&path).unwrap();
    assert_eq!(loaded, index);
    assert_eq!(loaded.render(), index.render());
    assert!(loaded.render().starts_with("fqnindex v1 jars=2 keys=7\n"));
}

#[test]
fn malformed_index_files() {
    let id = "a".repeat(64);
    for (text, line) in [
        ("garbage\n".to_owned(), 1),
        (format!("fqnindex v1 jars=1 keys=1\nedu\t{id}\n"), 2),
        (format!("fqnindex v1 jars=1 keys=2\nb.c\t{id}\na.b\t{id}\n"), 3),
        ("fqnindex v1 jars=1 keys=1\na.b\tnot-a-jar\n".to_owned(), 2),
    ] {
        match FqnIndex::parse(&text) {
            Err(IndexError::Malformed { line: l, .. }) => assert_eq!(l, line, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn index_from_store_skips_rejected_archives() {
    let corpus = tempfile::tempdir().unwrap();
    let store = tempfile::tempdir().unwrap();
    let dir = project(corpus.path(), "p");
    write(&dir.join("ok.jar"), uci_irv());
    write(&dir.join("bad.jar"), common::signed_jar(&["org.bad.X"], true));
    let scan = jbf_core::corpus::scan_corpus(corpus.path()).unwrap();
    let c = collect_jars(&scan.records, store.path()).unwrap();
    let index = build_index(store.path(), &c.entries);
    assert_eq!(index.jar_count(), 1);
    assert_eq!(index.key_count(), 4);
    assert!(index.query("org.bad").is_empty());
}

fn fqn() -> impl Strategy<Value = String> {
    prop::collection::vec("[a-z][a-z0-9]{0,3}", 2..=6).prop_map(|s| s.join("."))
}

fn jars() -> impl Strategy<Value = Vec<BTreeSet<String>>> {
    prop::collection::vec(prop::collection::btree_set(fqn(), 1..=20), 1..=8)
}

proptest! {
    #[test]
    fn prefix_closure(jar_types in jars()) {
        let mut b = IndexBuilder::new();
        let ids: Vec<JarId> = (0..jar_types.len()).map(|i| JarId::of_bytes(&i.to_le_bytes())).collect();
        for (id, types) in ids.iter().zip(&jar_types) {
            b.add_jar(id, types);
        }
        let index = b.build();
        for (id, types) in ids.iter().zip(&jar_types) {
            for t in types {
                for key in expand_prefixes(t) {
                    prop_assert!(index.query(key.as_str()).contains(id));
                }
            }
        }
        for (key, posting) in index.iter() {
            prop_assert!(key.as_str().contains('.'));
            prop_assert!(posting.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn insertion_order_does_not_matter(jar_types in jars(), seed in any::<u64>()) {
        let ids: Vec<JarId> = (0..jar_types.len()).map(|i| JarId::of_bytes(&i.to_le_bytes())).collect();
        let mut forward = IndexBuilder::new();
        for (id, types) in ids.iter().zip(&jar_types) {
            forward.add_jar(id, types);
        }
        let mut order: Vec<usize> = (0..ids.len()).collect();
        let n = order.len();
        order.rotate_left((seed as usize) % n);
        if seed % 2 == 0 { order.reverse(); }
        let mut shuffled = IndexBuilder::new();
        for i in order {
            shuffled.add_jar(&ids[i], &jar_types[i]);
        }
        prop_assert_eq!(forward.build().render(), shuffled.build().render());
    }

    #[test]
    fn render_parse_identity(jar_types in jars()) {
        let mut b = IndexBuilder::new();
        for (i, types) in jar_types.iter().enumerate() {
            b.add_jar(&JarId::of_bytes(&i.to_le_bytes()), types);
        }
        let index = b.build();
        let reparsed = FqnIndex::parse(&index.render()).unwrap();
        prop_assert_eq!(reparsed, index);
    }
}
