//! Arbitrary statement text never panics and never damages stored data.

use gridrel::query::parse;
use gridrel::{Database, DbOptions, QueryResult};
use proptest::prelude::*;

fn fragments() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        Just("select".to_string()),
        Just("*".to_string()),
        Just("from".to_string()),
        Just("T".to_string()),
        Just("where".to_string()),
        Just("A".to_string()),
        Just("=".to_string()),
        Just("'".to_string()),
        Just("(".to_string()),
        Just(")".to_string()),
        Just("insert into T values (".to_string()),
        Just("delete from T".to_string()),
        Just("update T set A =".to_string()),
        Just("drop table".to_string()),
        Just("--".to_string()),
        Just(";".to_string()),
        Just(",".to_string()),
        "-?[0-9]{1,12}",
        "[a-z#!<>=.]{1,4}",
        any::<char>().prop_map(String::from),
    ];
    prop::collection::vec(piece, 0..14).prop_map(|v| v.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parser_total(s in "\\PC{0,60}") {
        let _ = parse(&s);
    }

    #[test]
    fn garbage_leaves_data_intact(stmts in prop::collection::vec(fragments(), 1..8)) {
        let tmp = tempfile::tempdir().unwrap();
        let mut db = Database::create(tmp.path(), DbOptions { page_size: 256, ..DbOptions::default() }).unwrap();
        db.execute("create table T (A integer, B char(4)) grid (A)").unwrap();
        db.execute("create table KEEP (K integer) grid (K)").unwrap();
        for i in 0..40 {
            db.execute(&format!("insert into KEEP values ({i})")).unwrap();
        }
        for s in &stmts {
            let _ = db.execute(s);
        }
        drop(db);
        let mut db = Database::open(tmp.path(), 0).unwrap();
        match db.execute("select * from KEEP").unwrap() {
            QueryResult::Rows { rows, .. } => prop_assert_eq!(rows.len(), 40),
            other => prop_assert!(false, "{:?}", other),
        }
        prop_assert!(db.relation("KEEP").unwrap().check_invariants().is_ok());
        if let Some(t) = db.relation("T") {
            prop_assert!(t.check_invariants().is_ok());
        }
    }
}
