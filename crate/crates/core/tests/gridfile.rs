mod common;

use common::{int_schema, random_expr, random_tuple, rng, sorted};
use gridrel::storage::{FileRole, PagerOptions};
use gridrel::{CmpOp, Expr, GridFile, SplitPolicy, Tuple, Value};
use proptest::prelude::*;
use rand::Rng;

fn opts(page_size: usize) -> PagerOptions {
    PagerOptions {
        page_size,
        cache_pages: 0,
    }
}

#[derive(Debug, Clone)]
enum Op {
    Insert(Vec<i32>),
    DeleteWhere(u64),
}

fn op_strategy() -> impl Strategy<Value = Op> {
    prop_oneof![
        8 => prop::collection::vec(0i32..16, 3).prop_map(Op::Insert),
        1 => any::<u64>().prop_map(Op::DeleteWhere),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Random inserts and predicate deletes keep the grid consistent and
    /// every region scan equal to filtering a plain list.
    #[test]
    fn workload_matches_list(ops in prop::collection::vec(op_strategy(), 1..120),
                             c in 2usize..5,
                             midpoint in any::<bool>(),
                             seed in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let policy = if midpoint { SplitPolicy::MidpointFirst } else { SplitPolicy::RoundRobin };
        // A2 is not a grid attribute
        let mut g = GridFile::create(dir.path(), int_schema("W", 3, vec![0, 1], c), policy, opts(256)).unwrap();
        let mut list: Vec<Tuple> = Vec::new();
        let mut r = rng(seed);
        for op in ops {
            match op {
                Op::Insert(v) => {
                    let t = Tuple(v.into_iter().map(Value::Int).collect());
                    g.insert(&t).unwrap();
                    list.push(t);
                }
                Op::DeleteWhere(s) => {
                    let mut er = rng(s);
                    let e = random_expr(&mut er, 0, 3, 16, 2);
                    let (region, residual) = g.space().from_expr(&e, 0).unwrap();
                    let got = sorted(g.delete_where(&region, &residual).unwrap());
                    let (gone, kept): (Vec<_>, Vec<_>) = list.into_iter().partition(|t| common::eval_ref(&e, t));
                    list = kept;
                    prop_assert_eq!(got, sorted(gone));
                }
            }
        }
        if let Err(m) = g.check_invariants() {
            prop_assert!(false, "invariant violated: {}", m);
        }
        prop_assert_eq!(g.len() as usize, list.len());
        for _ in 0..5 {
            let e = random_expr(&mut r, 0, 3, 16, 3);
            let (region, residual) = g.space().from_expr(&e, 0).unwrap();
            let got = sorted(g.scan_region(&region, &residual).unwrap());
            let want = sorted(list.iter().filter(|t| common::eval_ref(&e, t)).cloned().collect());
            prop_assert_eq!(got, want);
        }
    }
}

#[test]
fn point_queries_read_two_pages() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = GridFile::create(
        dir.path(),
        int_schema("P", 3, vec![0, 1, 2], 6),
        SplitPolicy::RoundRobin,
        opts(512),
    )
    .unwrap();
    let mut r = rng(7);
    let mut list = Vec::new();
    for _ in 0..200 {
        let t = random_tuple(&mut r, 3, 1 << 20);
        g.insert(&t).unwrap();
        list.push(t);
    }
    assert_eq!(g.stats().overflow_pages, 0);
    for t in &list {
        g.reset_access_stats();
        let got = g.point_query(&t.0).unwrap();
        let s = g.access_stats();
        assert_eq!((s.dir_reads, s.data_reads, s.scale_reads), (1, 1, 0));
        let want: Vec<_> = list.iter().filter(|u| *u == t).cloned().collect();
        assert_eq!(got, want);
    }
    g.reset_access_stats();
    assert!(g
        .point_query(&[Value::Int(-1), Value::Int(-1), Value::Int(-1)])
        .unwrap()
        .is_empty());
    assert_eq!(g.access_stats().reads(), 2);
}

#[test]
fn refinement_creates_product_of_other_extents() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = GridFile::create(
        dir.path(),
        int_schema("N", 3, vec![0, 1, 2], 2),
        SplitPolicy::RoundRobin,
        opts(256),
    )
    .unwrap();
    let mut r = rng(3);
    for _ in 0..150 {
        let before = g.partlist().extents();
        let n = g.partlist().len();
        g.insert(&random_tuple(&mut r, 3, 1000)).unwrap();
        for pos in n..g.partlist().len() {
            let d = g.partlist().entry(pos).dim;
            let ext = g.partlist().extents_at_entry(pos).to_vec();
            let blocks_before: usize = ext.iter().product();
            let mut after = ext.clone();
            after[d] += 1;
            let created = after.iter().product::<usize>() - blocks_before;
            let other: usize = (0..3).filter(|&j| j != d).map(|j| ext[j]).product();
            assert_eq!(created, other);
            assert_eq!(g.directory().piece_len(g.partlist(), pos), other);
        }
        assert!(g.partlist().extents().iter().zip(&before).all(|(a, b)| a >= b));
    }
}

#[test]
fn ordered_scan_is_sorted() {
    for seed in 0..10u64 {
        let dir = tempfile::tempdir().unwrap();
        let mut g = GridFile::create(
            dir.path(),
            int_schema("O", 2, vec![0, 1], 3),
            SplitPolicy::MidpointFirst,
            opts(256),
        )
        .unwrap();
        let mut r = rng(seed);
        for _ in 0..120 {
            g.insert(&random_tuple(&mut r, 2, 200)).unwrap();
        }
        let all = sorted(g.scan_all().unwrap());
        for dim in 0..2 {
            let full = g.space().full();
            let out = g.ordered_scan(dim, &full, &Expr::Bool(true)).unwrap();
            assert!(out.windows(2).all(|w| w[0].0[dim] <= w[1].0[dim]));
            assert_eq!(sorted(out), all);
        }
    }
}

#[test]
fn ordered_scan_single_interval() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = GridFile::create(
        dir.path(),
        int_schema("S", 2, vec![0, 1], 50),
        SplitPolicy::RoundRobin,
        opts(4096),
    )
    .unwrap();
    for v in [5, 3, 9, 1] {
        g.insert(&Tuple(vec![Value::Int(v), Value::Int(0)])).unwrap();
    }
    let full = g.space().full();
    let out: Vec<i32> = g
        .ordered_scan(0, &full, &Expr::Bool(true))
        .unwrap()
        .into_iter()
        .map(|t| match t.0[0] {
            Value::Int(v) => v,
            _ => unreachable!(),
        })
        .collect();
    assert_eq!(out, vec![1, 3, 5, 9]);
}

#[test]
fn shared_bucket_read_once() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = GridFile::create(
        dir.path(),
        int_schema("D", 2, vec![0, 1], 4),
        SplitPolicy::RoundRobin,
        opts(256),
    )
    .unwrap();
    let mut r = rng(11);
    for _ in 0..300 {
        let t = random_tuple(&mut r, 2, 100);
        g.insert(&t).unwrap();
    }
    let region = g.space().from_basic_term(0, CmpOp::Ge, &Value::Int(10)).unwrap();
    let units = g.plan_scan(&region).unwrap();
    let mut pages: Vec<u32> = units.iter().map(|u| u.bucket).collect();
    pages.sort_unstable();
    let n = pages.len();
    pages.dedup();
    assert_eq!(n, pages.len());
}

#[test]
fn directory_writes_append_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = GridFile::create(
        dir.path(),
        int_schema("A", 3, vec![0, 1, 2], 3),
        SplitPolicy::RoundRobin,
        opts(256),
    )
    .unwrap();
    g.set_trace(true);
    let mut r = rng(5);
    for _ in 0..300 {
        let dom = r.random_range(10..1000);
        let t = random_tuple(&mut r, 3, dom);
        g.insert(&t).unwrap();
    }
    let w = g.directory().element_width();
    for ev in g.take_trace() {
        if let gridrel::storage::TraceEvent::Write { id, before, after } = ev {
            if id.role != FileRole::Directory {
                continue;
            }
            let changed: Vec<usize> = (0..before.len()).filter(|&i| before[i] != after[i]).collect();
            let fresh = changed.iter().all(|&i| before[i] == 0);
            let one_slot = changed.first().is_none_or(|&f| {
                let last = *changed.last().unwrap();
                last - f < w
            });
            assert!(fresh || one_slot, "page {id} rewritten outside one element");
        }
    }
}
