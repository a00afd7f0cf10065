use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use gridrel::{CmpOp, Expr, SplitPolicy};
use gridrel_bench::{build, tuples};

fn inserts(c: &mut Criterion) {
    let data = tuples(2000, 3, 1);
    let mut g = c.benchmark_group("insert");
    for policy in [SplitPolicy::RoundRobin, SplitPolicy::MidpointFirst] {
        g.bench_function(policy.to_string(), |b| {
            b.iter_batched(
                || tempfile::tempdir().unwrap(),
                |dir| build(dir.path(), 3, &data, policy, 64),
                BatchSize::PerIteration,
            )
        });
    }
    g.finish();
}

fn queries(c: &mut Criterion) {
    let data = tuples(20_000, 3, 2);
    let dir = tempfile::tempdir().unwrap();
    let mut f = build(dir.path(), 3, &data, SplitPolicy::RoundRobin, 0);
    let mut i = 0;
    c.bench_function("point_query", |b| {
        b.iter(|| {
            i = (i + 7919) % data.len();
            f.point_query(&data[i].0).unwrap()
        })
    });
    let e = Expr::and(
        Expr::cmp(CmpOp::Ge, Expr::col(0, 0), Expr::int(1 << 18)),
        Expr::cmp(CmpOp::Lt, Expr::col(0, 1), Expr::int(1 << 17)),
    );
    let (region, residual) = f.space().from_expr(&e, 0).unwrap();
    c.bench_function("range_scan", |b| b.iter(|| f.scan_region(&region, &residual).unwrap()));
    c.bench_function("ordered_scan", |b| {
        b.iter(|| f.ordered_scan(2, &region, &residual).unwrap())
    });
}

criterion_group!(benches, inserts, queries);
criterion_main!(benches);
