#![allow(dead_code)]

use std::fs;
use std::io::{Cursor, Write};
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use sha2::{Digest, Sha256};
use zip::write::SimpleFileOptions;

/// Zip archive holding the given entries, each with `contents` as bytes.
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

/// Archive with one empty class entry per type name (`a.b.C`).
pub fn jar_of_types(types: &[&str]) -> Vec<u8> {
    let mut names: Vec<String> = vec!["META-INF/MANIFEST.MF".into()];
    names.extend(types.iter().map(|t| format!("{}.class", t.replace('.', "/"))));
    let entries: Vec<(&str, &[u8])> = names
        .iter()
        .map(|n| (n.as_str(), if n.ends_with(".MF") { &b"Manifest-Version: 1.0\r\n\r\n"[..] } else { &b"\xCA\xFE\xBA\xBE"[..] }))
        .collect();
    jar_with(&entries)
}

fn b64_sha256(data: &[u8]) -> String {
    STANDARD.encode(Sha256::digest(data))
}

/// A jar whose `META-INF/SIGNER.SF` carries correct SHA-256 digests for the
/// manifest and each entry section. With `tamper`, a byte of the manifest's
/// last section is changed after signing.
pub fn signed_jar(types: &[&str], tamper: bool) -> Vec<u8> {
    let classes: Vec<String> = types.iter().map(|t| format!("{}.class", t.replace('.', "/"))).collect();
    let main = "Manifest-Version: 1.0\r\nCreated-By: test\r\n\r\n".to_owned();
    let sections: Vec<String> = classes
        .iter()
        .map(|c| format!("Name: {c}\r\nSHA-256-Digest: {}\r\n\r\n", b64_sha256(b"\xCA\xFE\xBA\xBE")))
        .collect();
    let manifest = format!("{main}{}", sections.concat());

    let mut sf = format!(
        "Signature-Version: 1.0\r\nSHA-256-Digest-Manifest: {}\r\nSHA-256-Digest-Manifest-Main-Attributes: {}\r\n\r\n",
        b64_sha256(manifest.as_bytes()),
        b64_sha256(main.as_bytes())
    );
    for (c, s) in classes.iter().zip(&sections) {
        sf.push_str(&format!("Name: {c}\r\nSHA-256-Digest: {}\r\n\r\n", b64_sha256(s.as_bytes())));
    }

    let mut manifest = manifest.into_bytes();
    if tamper {
        // flip one base64 character inside the last entry digest
        let pos = manifest.len() - 6;
        manifest[pos] = if manifest[pos] == b'A' { b'B' } else { b'A' };
    }
    let mut entries: Vec<(&str, &[u8])> = vec![
        ("META-INF/MANIFEST.MF", &manifest),
        ("META-INF/SIGNER.SF", sf.as_bytes()),
        ("META-INF/SIGNER.RSA", b"not checked"),
    ];
    for c in &classes {
        entries.push((c.as_str(), b"\xCA\xFE\xBA\xBE"));
    }
    jar_with(&entries)
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, bytes).unwrap();
}

/// Creates a project directory with one source file.
pub fn project(root: &Path, id: &str) -> std::path::PathBuf {
    let dir = root.join(id);
    write(&dir.join("src/Main.java"), "class Main {}\n");
    dir
}
