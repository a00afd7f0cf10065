//! Each line of `golden/statements.sql` is parsed on its own; the matching
//! line of `golden/statements.expected` holds the tree or the error.
//! Run with `UPDATE_GOLDEN=1` to rewrite the expected file.

use std::path::PathBuf;

use gridrel::query::parse;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn render(line: &str) -> String {
    match parse(line) {
        Ok(s) => s.to_string(),
        Err(e) => format!("error: {e}"),
    }
}

#[test]
fn statements_match_golden() {
    let src = std::fs::read_to_string(golden("statements.sql")).unwrap();
    let got: Vec<String> = src.lines().filter(|l| !l.trim().is_empty()).map(render).collect();
    let path = golden("statements.expected");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, got.join("\n") + "\n").unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap();
    let want: Vec<&str> = want.lines().collect();
    assert_eq!(got.len(), want.len(), "line count differs from the golden file");
    for (i, (g, w)) in got.iter().zip(&want).enumerate() {
        assert_eq!(g, w, "statement on line {}", i + 1);
    }
}

#[test]
fn errors_are_stable() {
    for (sql, pos) in [
        ("select from t", 7),
        ("select * from t where", 21),
        ("select * from t;;", 16),
        ("  frobnicate", 2),
    ] {
        let a = parse(sql).unwrap_err();
        assert_eq!(a.position, pos, "{sql}");
        assert_eq!(a, parse(sql).unwrap_err());
    }
}
