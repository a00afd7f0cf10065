//! Directory addressing checked against a logical k-dimensional directory
//! rebuilt by replaying the scale history.

use gridrel::directory::{Directory, DirectoryElement};
use gridrel::scales::{Partlist, ScaleValue};
use gridrel::storage::{Pager, PagerOptions};
use gridrel::{DataType, Value};
use proptest::prelude::*;

fn ikey(v: i32) -> Vec<u8> {
    DataType::Integer.key_of(&Value::Int(v)).unwrap()
}

/// Dense k-dimensional array of bucket ids, last dimension fastest.
#[derive(Clone, Debug)]
struct Logical {
    ext: Vec<usize>,
    cells: Vec<u32>,
}

impl Logical {
    fn idx(&self, c: &[usize]) -> usize {
        c.iter().zip(&self.ext).fold(0, |a, (&x, &e)| a * e + x)
    }

    fn coords(&self, mut i: usize) -> Vec<usize> {
        let mut c = vec![0; self.ext.len()];
        for d in (0..self.ext.len()).rev() {
            c[d] = i % self.ext[d];
            i /= self.ext[d];
        }
        c
    }

    /// Inserts a new slab at index `s` along `d`, filled from `slab`
    /// (row-major over the other dimensions).
    fn split(&mut self, d: usize, s: usize, slab: &[u32]) {
        let mut ext = self.ext.clone();
        ext[d] += 1;
        let mut next = Logical {
            cells: vec![0; ext.iter().product()],
            ext,
        };
        for i in 0..next.cells.len() {
            let c = next.coords(i);
            next.cells[i] = if c[d] == s {
                let cross = (0..c.len()).filter(|&j| j != d).fold(0, |a, j| a * self.ext[j] + c[j]);
                slab[cross]
            } else {
                let mut old = c.clone();
                if old[d] > s {
                    old[d] -= 1;
                }
                self.cells[self.idx(&old)]
            };
        }
        *self = next;
    }
}

struct Fixture {
    _tmp: tempfile::TempDir,
    pager: Pager,
    dir: Directory,
    pl: Partlist,
    logical: Logical,
    /// Sorted split values per dimension.
    values: Vec<Vec<i32>>,
}

fn build(k: usize, splits: &[(usize, i32)], page_size: usize) -> Fixture {
    let tmp = tempfile::tempdir().unwrap();
    let mut pager = Pager::create(
        tmp.path(),
        "O",
        PagerOptions {
            page_size,
            cache_pages: 0,
        },
    )
    .unwrap();
    let mut dir = Directory::init(&mut pager, k, 0).unwrap();
    let mut pl = Partlist::new(k);
    pl.init_file(&mut pager).unwrap();
    let mut logical = Logical {
        ext: vec![1; k],
        cells: vec![0],
    };
    let mut values = vec![Vec::new(); k];
    let mut next = 1u32;
    for &(d, v) in splits {
        if values[d].contains(&v) || v == i32::MIN {
            continue;
        }
        let pos = pl.len();
        let n: usize = (0..k).filter(|&j| j != d).map(|j| pl.extent_at(j, pos)).product();
        let elems: Vec<DirectoryElement> = (0..n).map(|i| DirectoryElement::new(next + i as u32)).collect();
        let ids: Vec<u32> = elems.iter().map(|e| e.bucket).collect();
        next += n as u32;
        let addr = dir.append_piece_for(&mut pager, &pl, d, pos, &elems).unwrap();
        pl.append_entry(&mut pager, d, ScaleValue::new(ikey(v)).unwrap(), addr)
            .unwrap();
        let s = values[d].partition_point(|&x| x < v) + 1;
        values[d].insert(s - 1, v);
        logical.split(d, s, &ids);
    }
    Fixture {
        _tmp: tmp,
        pager,
        dir,
        pl,
        logical,
        values,
    }
}

/// One probe value inside every interval of a dimension, plus the bounds.
fn probes(values: &[i32]) -> Vec<i32> {
    let mut p = vec![-1000];
    for &v in values {
        p.push(v);
        p.push(v + 1);
        p.push(v - 1);
    }
    p.push(1000);
    p
}

fn splits_strategy(k: usize, n: usize) -> impl Strategy<Value = Vec<(usize, i32)>> {
    prop::collection::vec((0..k, -50i32..50), 0..=n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn locate_matches_logical_directory(k in 1usize..=4, seed in any::<u64>(), page in prop::sample::select(vec![64usize, 128, 4096])) {
        let mut rng = seed;
        let mut splits = Vec::new();
        for _ in 0..12 {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            splits.push(((rng >> 33) as usize % k, ((rng >> 40) % 100) as i32 - 50));
        }
        let mut f = build(k, &splits, page);
        let per_dim: Vec<Vec<i32>> = f.values.iter().map(|v| probes(v)).collect();
        let mut point = vec![0usize; k];
        loop {
            let vals: Vec<i32> = (0..k).map(|d| per_dim[d][point[d]]).collect();
            let keys: Vec<Vec<u8>> = vals.iter().map(|&v| ikey(v)).collect();
            let coords: Vec<usize> = (0..k)
                .map(|d| f.values[d].partition_point(|&x| x <= vals[d]))
                .collect();
            let want = f.logical.cells[f.logical.idx(&coords)];
            f.pager.reset_stats();
            let loc = f.dir.locate_element(&mut f.pager, &f.pl, &keys).unwrap();
            prop_assert_eq!(loc.element.bucket, want);
            prop_assert_eq!(&loc.coords, &coords);
            prop_assert_eq!(f.pager.stats().dir_reads, 1);
            let mut d = 0;
            while d < k {
                point[d] += 1;
                if point[d] < per_dim[d].len() { break; }
                point[d] = 0;
                d += 1;
            }
            if d == k { break; }
        }
    }

    #[test]
    fn enumerate_matches_brute_force(splits in splits_strategy(2, 10), a0 in 0usize..12, a1 in 0usize..12, w0 in 0usize..12, w1 in 0usize..12) {
        let mut f = build(2, &splits, 128);
        let ext = f.logical.ext.clone();
        let ranges = [
            (a0.min(ext[0] - 1), (a0 + w0).min(ext[0] - 1)),
            (a1.min(ext[1] - 1), (a1 + w1).min(ext[1] - 1)),
        ];
        let mut want: Vec<(Vec<usize>, u32)> = Vec::new();
        for i in 0..f.logical.cells.len() {
            let c = f.logical.coords(i);
            if (0..2).all(|d| ranges[d].0 <= c[d] && c[d] <= ranges[d].1) {
                want.push((c, f.logical.cells[i]));
            }
        }
        let mut got = Vec::new();
        f.pager.reset_stats();
        f.dir.enumerate_blocks(&mut f.pager, &f.pl, &ranges, |_, _, c, e| {
            got.push((c.to_vec(), e.bucket));
            Ok(())
        }).unwrap();
        let reads = f.pager.stats().dir_reads;
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
        prop_assert!(reads <= f.pager.page_count(gridrel::storage::FileRole::Directory) as u64);
    }
}

#[test]
fn whole_space_enumerates_every_element_once() {
    let splits: Vec<(usize, i32)> = (0..12).map(|i| (i % 3, (i as i32 * 37) % 90 - 45)).collect();
    let mut f = build(3, &splits, 4096);
    let ranges: Vec<(usize, usize)> = f.logical.ext.iter().map(|&e| (0, e - 1)).collect();
    let mut seen = Vec::new();
    f.dir
        .enumerate_blocks(&mut f.pager, &f.pl, &ranges, |_, _, _, e| {
            seen.push(e.bucket);
            Ok(())
        })
        .unwrap();
    seen.sort_unstable();
    let before = seen.len();
    seen.dedup();
    // every element id in this fixture is distinct
    assert_eq!(before, seen.len());
    assert_eq!(before, f.logical.cells.len());
}

#[test]
fn reload_reproduces_partlist() {
    let tmp = tempfile::tempdir().unwrap();
    let opts = PagerOptions {
        page_size: 64,
        cache_pages: 0,
    };
    let mut pager = Pager::create(tmp.path(), "R", opts).unwrap();
    let mut dir = Directory::init(&mut pager, 2, 0).unwrap();
    let mut pl = Partlist::new(2);
    pl.init_file(&mut pager).unwrap();
    for i in 0..40 {
        let d = i % 2;
        let pos = pl.len();
        let n = pl.extent_at(1 - d, pos);
        let addr = dir
            .append_piece_for(&mut pager, &pl, d, pos, &vec![DirectoryElement::new(i as u32); n])
            .unwrap();
        pl.append_entry(&mut pager, d, ScaleValue::new(ikey(i as i32 * 3 + 1)).unwrap(), addr)
            .unwrap();
    }
    pager.sync().unwrap();
    drop(pager);
    let mut pager = Pager::open(tmp.path(), "R", opts).unwrap();
    let loaded = Partlist::load(&mut pager, 2).unwrap();
    assert_eq!(loaded.entries(), pl.entries());
}
