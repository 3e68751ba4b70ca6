//! The header is maintained by hand; this keeps it and the exported
//! symbols in lockstep, in both directions.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

fn exported_symbols(src: &str) -> BTreeSet<String> {
    let mut names = BTreeSet::new();
    let mut saw_no_mangle = false;
    for line in src.lines() {
        let line = line.trim();
        if line.starts_with("#[no_mangle]") {
            saw_no_mangle = true;
            continue;
        }
        if !saw_no_mangle {
            continue;
        }
        if let Some(rest) = line
            .strip_prefix("pub unsafe extern \"C\" fn ")
            .or_else(|| line.strip_prefix("pub extern \"C\" fn "))
        {
            let name: String = rest
                .chars()
                .take_while(|c| c.is_alphanumeric() || *c == '_')
                .collect();
            assert!(!name.is_empty(), "could not read a name from: {line}");
            names.insert(name);
            saw_no_mangle = false;
        }
    }
    names
}

fn strip_block_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("/*") {
        out.push_str(&rest[..start]);
        match rest[start..].find("*/") {
            Some(end) => rest = &rest[start + end + 2..],
            None => return out,
        }
    }
    out.push_str(rest);
    out
}

fn declared_functions(header: &str) -> BTreeSet<String> {
    let code = strip_block_comments(header);
    let mut names = BTreeSet::new();
    let mut prev_end = 0usize;
    while let Some(pos) = code[prev_end..].find('(') {
        let abs = prev_end + pos;
        let ident: String = code[..abs]
            .chars()
            .rev()
            .take_while(|c| c.is_alphanumeric() || *c == '_')
            .collect::<String>()
            .chars()
            .rev()
            .collect();
        if ident.starts_with("seq_") {
            names.insert(ident);
        }
        prev_end = abs + 1;
    }
    names
}

#[test]
fn header_matches_the_exported_symbols() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let src = fs::read_to_string(root.join("src/lib.rs")).unwrap();
    let header = fs::read_to_string(root.join("include/seqprice.h")).unwrap();

    let exported = exported_symbols(&src);
    let declared = declared_functions(&header);

    let missing: Vec<_> = exported.difference(&declared).collect();
    assert!(missing.is_empty(), "exported but not in the header: {missing:?}");
    let stale: Vec<_> = declared.difference(&exported).collect();
    assert!(stale.is_empty(), "declared but not exported: {stale:?}");
    assert!(!exported.is_empty());
}
