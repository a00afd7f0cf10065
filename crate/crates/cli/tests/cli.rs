use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn gridrel(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_gridrel"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn script(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn empty_script_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let s = script(tmp.path(), "empty.sql", "");
    let db = tmp.path().join("db");
    let o = gridrel(&["--db", db.to_str().unwrap(), "--script", &s, "--strict"], "");
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
}

#[test]
fn strict_stops_at_first_error_and_keeps_earlier_work() {
    let tmp = tempfile::tempdir().unwrap();
    let db = tmp.path().join("db");
    let db = db.to_str().unwrap();
    let s = script(
        tmp.path(),
        "bad.sql",
        "create table T (A integer) grid (A);\ninsert into T values (1);\nselect from T;\ninsert into T values (2);\n",
    );
    let o = gridrel(&["--db", db, "--script", &s, "--strict"], "");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("syntax error at 7"));
    let o = gridrel(&["--db", db, "--format", "csv"], "select * from T;\n");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "A\n1\n");

    // without --strict the rest of the script runs
    let o = gridrel(&["--db", db, "--script", &s], "");
    assert_eq!(o.status.code(), Some(0));
    let o = gridrel(&["--db", db, "--format", "csv"], "select * from T order by A;\n");
    assert_eq!(stdout(&o), "A\n1\n1\n2\n");
}

#[test]
fn missing_script_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gridrel(&["--script", tmp.path().join("nope.sql").to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(gridrel(&["--policy", "sideways"], "").status.code(), Some(2));
    assert_eq!(gridrel(&["--page-size", "big"], "").status.code(), Some(2));
    assert_eq!(gridrel(&["--page-size", "64"], "").status.code(), Some(2));
}

#[test]
fn warm_point_query_reads_two_pages() {
    let tmp = tempfile::tempdir().unwrap();
    let db = tmp.path().join("db");
    let mut text = String::from("create table P (A integer, B integer, C integer) grid (A, B, C);\n");
    for i in 0..300 {
        text += &format!("insert into P values ({}, {}, {});\n", i * 7 % 101, i * 13 % 97, i);
    }
    text += "select * from P where A = 7 and B = 13 and C = 1;\n.reset\nselect * from P where A = 7 and B = 13 and C = 1;\n.access\n.stats\n";
    let o = gridrel(
        &["--db", db.to_str().unwrap(), "--no-cache", "--page-size", "256"],
        &text,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("page reads: 2 (directory 1, data 1, scales 0)"), "{out}");
    assert!(out.contains("redundancy"));
    assert!(out.contains("A="));
}

#[test]
fn explain_shows_merge_group() {
    let text = "create table R (A integer, B integer) grid (A);\ncreate table S (D integer) grid (D);\n.explain select * from R, S where R.A = S.D\n";
    let o = gridrel(&[], text);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.matches("group ").count(), 1, "{out}");
    assert!(out.contains("merge join on R.A = S.D"));
}

#[test]
fn errors_do_not_end_the_session() {
    let o = gridrel(
        &[],
        "select * from NOPE;\nfrobnicate;\n.bogus\ncreate table T (A integer);\nselect * from T;\n",
    );
    assert_eq!(o.status.code(), Some(0));
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    assert_eq!(err.matches("error:").count(), 3, "{err}");
    assert!(stdout(&o).contains("(0 rows)"));
}

#[test]
fn experiment_csv_is_byte_stable() {
    let args = ["experiment", "--tuples", "400", "--seed", "3", "--page-size", "1024"];
    let a = gridrel(&args, "");
    let b = gridrel(&args, "");
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    assert!(out.starts_with("relation,policy,tuples,buckets,occupancy,redundancy,partitions\n"));
    assert!(out.contains("BOOKS,midpoint,400,"));
    assert!(out.contains("SMALLBOOKS,roundrobin,400,"));
    assert!(out.contains("\"select * from BOOKS where AUTHOR = 'ULMAN'\""));
    let other = gridrel(
        &["experiment", "--tuples", "400", "--seed", "4", "--page-size", "1024"],
        "",
    );
    assert_ne!(other.stdout, a.stdout);
}
