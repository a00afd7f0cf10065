//! Fixtures for the benchmarks: seeded integer relations on disk.

use std::path::Path;

use gridrel::{Attribute, DataType, GridFile, PagerOptions, RelationSchema, SplitPolicy, Tuple, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PAGE_SIZE: usize = 1024;

/// `k` integer attributes, all in the grid, full pages.
pub fn schema(k: usize) -> RelationSchema {
    let attrs = (0..k)
        .map(|i| Attribute::new(&format!("A{i}"), DataType::Integer))
        .collect();
    let s = RelationSchema::new("BENCH", attrs, PAGE_SIZE).with_grid((0..k).collect());
    let c = s.max_capacity(PAGE_SIZE);
    s.with_capacity(c)
}

pub fn tuples(n: usize, k: usize, seed: u64) -> Vec<Tuple> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Tuple((0..k).map(|_| Value::Int(r.random_range(0..1 << 20))).collect()))
        .collect()
}

pub fn build(dir: &Path, k: usize, data: &[Tuple], policy: SplitPolicy, cache_pages: usize) -> GridFile {
    let opts = PagerOptions {
        page_size: PAGE_SIZE,
        cache_pages,
    };
    let mut g = GridFile::create(dir, schema(k), policy, opts).expect("create relation");
    for t in data {
        g.insert(t).expect("insert");
    }
    g
}
