//! Region sets against explicit point sets on a small integer lattice.

mod common;

use std::collections::BTreeSet;

use common::{eval_ref, random_expr, rng};
use gridrel::region::split;
use gridrel::{DataType, Interval, Parallelepiped, RegionSet, RegionSpace, Tuple, Value};
use proptest::prelude::*;

const N: i32 = 8;

fn key(v: i32) -> Vec<u8> {
    DataType::Integer.key_of(&Value::Int(v)).unwrap()
}

fn points(k: usize) -> Vec<Vec<i32>> {
    (0..N.pow(k as u32))
        .map(|mut i| {
            (0..k)
                .map(|_| {
                    let v = i % N;
                    i /= N;
                    v
                })
                .collect()
        })
        .collect()
}

fn members(r: &RegionSet, k: usize) -> BTreeSet<Vec<i32>> {
    points(k)
        .into_iter()
        .filter(|p| r.contains(&p.iter().map(|&v| key(v)).collect::<Vec<_>>()))
        .collect()
}

fn box_strategy(k: usize) -> impl Strategy<Value = Parallelepiped> {
    prop::collection::vec((0..N, 1..=N), k).prop_map(|ivs| {
        Parallelepiped::new(
            ivs.into_iter()
                .map(|(a, len)| {
                    let hi = (a + len).min(N);
                    Interval::new(key(a), Some(key(hi)))
                })
                .collect(),
        )
    })
}

fn region_strategy(k: usize) -> impl Strategy<Value = RegionSet> {
    prop::collection::vec(box_strategy(k), 0..5).prop_map(|bs| {
        bs.into_iter()
            .fold(RegionSet::empty(), |acc, b| acc.union(&RegionSet::single(b)))
    })
}

proptest! {
    #[test]
    fn union_and_intersection(a in region_strategy(3), b in region_strategy(3)) {
        let (ma, mb) = (members(&a, 3), members(&b, 3));
        let u = a.union(&b);
        let i = a.intersect(&b);
        prop_assert!(u.is_disjoint());
        prop_assert!(i.is_disjoint());
        prop_assert_eq!(members(&u, 3), ma.union(&mb).cloned().collect::<BTreeSet<_>>());
        prop_assert_eq!(members(&i, 3), ma.intersection(&mb).cloned().collect::<BTreeSet<_>>());
    }

    #[test]
    fn split_covers_both(c1 in box_strategy(2), c2 in box_strategy(2)) {
        let out = split(&c1, &c2);
        prop_assert!(out.len() - 1 <= 3);
        let r = RegionSet::from_disjoint(out);
        prop_assert!(r.is_disjoint());
        let want: BTreeSet<_> = members(&RegionSet::single(c1), 2)
            .union(&members(&RegionSet::single(c2), 2))
            .cloned()
            .collect();
        prop_assert_eq!(members(&r, 2), want);
    }

    #[test]
    fn bounding_box_encloses(a in region_strategy(2)) {
        if let Some(bb) = a.bounding_box() {
            let hull = members(&RegionSet::single(bb), 2);
            prop_assert!(members(&a, 2).is_subset(&hull));
        }
    }
}

#[test]
fn collapsed_regions_stay_sound() {
    // a box limit of 2 forces most disjunctions onto their bounding box
    let space = RegionSpace::integers(2, 0, N).with_limit(2);
    let mut r = rng(11);
    let mut collapsed = 0;
    for _ in 0..300 {
        let e = random_expr(&mut r, 0, 2, N, 4);
        let (region, residual) = space.from_expr(&e, 0).unwrap();
        collapsed += usize::from(region.len() == 1);
        assert!(region.len() <= 2);
        for p in points(2) {
            let t = Tuple(p.iter().map(|&v| Value::Int(v)).collect());
            let keys: Vec<_> = p.iter().map(|&v| key(v)).collect();
            let truth = eval_ref(&e, &t);
            assert!(!truth || region.contains(&keys), "{e} at {p:?}");
            assert_eq!(region.contains(&keys) && eval_ref(&residual, &t), truth, "{e} at {p:?}");
        }
    }
    assert!(collapsed > 0);
}
