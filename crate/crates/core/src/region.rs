//! Query regions as sets of disjoint boxes over a relation's grid space.
//!
//! Intervals are half-open over fixed-width grid keys, `hi == None` meaning
//! unbounded above. A predicate is turned into a [`RegionSet`] plus a residual
//! expression that must still be checked on every tuple found in the region.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{ArithOp, CmpOp, ColumnRef, Expr};
use crate::value::{DataType, Key, RelationSchema, Value};

/// Default cap on boxes per region before collapsing to a bounding box.
pub const DEFAULT_BOX_LIMIT: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Key,
    pub hi: Option<Key>,
}

fn hi_cmp(a: &Option<Key>, b: &Option<Key>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(x), Some(y)) => x.cmp(y),
    }
}

impl Interval {
    pub fn new(lo: Key, hi: Option<Key>) -> Interval {
        Interval { lo, hi }
    }

    pub fn full(width: usize) -> Interval {
        Interval {
            lo: vec![0; width],
            hi: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.hi.as_ref().is_some_and(|h| *h <= self.lo)
    }

    pub fn contains(&self, key: &[u8]) -> bool {
        self.lo.as_slice() <= key && self.hi.as_ref().is_none_or(|h| key < h.as_slice())
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.clone().max(other.lo.clone()),
            hi: if hi_cmp(&self.hi, &other.hi) == Ordering::Less {
                self.hi.clone()
            } else {
                other.hi.clone()
            },
        }
    }

    /// `self` lies within `other`.
    pub fn within(&self, other: &Interval) -> bool {
        self.lo >= other.lo && hi_cmp(&self.hi, &other.hi) != Ordering::Greater
    }
}

/// Smallest key strictly greater than `key` of the same width, `None` when
/// `key` is the largest.
pub fn successor(key: &[u8]) -> Option<Key> {
    let mut k = key.to_vec();
    for b in k.iter_mut().rev() {
        if *b == 0xFF {
            *b = 0;
        } else {
            *b += 1;
            return Some(k);
        }
    }
    None
}

/// An axis-aligned box, one interval per grid dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Parallelepiped(Vec<Interval>);

impl Parallelepiped {
    pub fn new(intervals: Vec<Interval>) -> Parallelepiped {
        Parallelepiped(intervals)
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().any(Interval::is_empty)
    }

    pub fn contains(&self, keys: &[Key]) -> bool {
        self.0.iter().zip(keys).all(|(iv, k)| iv.contains(k))
    }

    pub fn intersect(&self, other: &Parallelepiped) -> Parallelepiped {
        Parallelepiped(self.0.iter().zip(&other.0).map(|(a, b)| a.intersect(b)).collect())
    }

    pub fn within(&self, other: &Parallelepiped) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a.within(b))
    }

    pub fn disjoint(&self, other: &Parallelepiped) -> bool {
        self.intersect(other).is_empty()
    }

    fn hull(&self, other: &Parallelepiped) -> Parallelepiped {
        Parallelepiped(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| Interval {
                    lo: a.lo.clone().min(b.lo.clone()),
                    hi: if hi_cmp(&a.hi, &b.hi) == Ordering::Greater {
                        a.hi.clone()
                    } else {
                        b.hi.clone()
                    },
                })
                .collect(),
        )
    }
}

/// Covers `c1 ∪ c2` with disjoint boxes: `c1` itself plus the pieces of `c2`
/// outside it. Nested boxes collapse to the larger one.
pub fn split(c1: &Parallelepiped, c2: &Parallelepiped) -> Vec<Parallelepiped> {
    let c3 = c1.intersect(c2);
    if c3.is_empty() {
        return vec![c1.clone(), c2.clone()];
    }
    if c2.within(c1) {
        return vec![c1.clone()];
    }
    if c1.within(c2) {
        return vec![c2.clone()];
    }
    let mut out = vec![c1.clone()];
    out.extend(carve(c2, &c3));
    let k = c1.k();
    assert!(
        k >= 63 || out.len() - 1 < (1usize << k),
        "split produced {} pieces for k = {k}",
        out.len() - 1
    );
    out
}

/// Pieces of `outer` outside `inner`, where `inner ⊆ outer`. Dimensions where
/// only one side protrudes are peeled first, lowest dimension on ties.
fn carve(outer: &Parallelepiped, inner: &Parallelepiped) -> Vec<Parallelepiped> {
    let mut rest = outer.clone();
    let mut pieces = Vec::new();
    loop {
        let sides: Vec<(bool, bool)> = rest
            .0
            .iter()
            .zip(&inner.0)
            .map(|(r, i)| (r.lo < i.lo, hi_cmp(&r.hi, &i.hi) == Ordering::Greater))
            .collect();
        let pick = sides
            .iter()
            .position(|&(l, u)| l != u)
            .or_else(|| sides.iter().position(|&(l, u)| l || u));
        let Some(j) = pick else {
            break;
        };
        let (low, _) = sides[j];
        let mut piece = rest.clone();
        if low {
            piece.0[j].hi = Some(inner.0[j].lo.clone());
            rest.0[j].lo = inner.0[j].lo.clone();
        } else {
            piece.0[j].lo = inner.0[j].hi.clone().expect("protruding side is bounded");
            rest.0[j].hi = inner.0[j].hi.clone();
        }
        pieces.push(piece);
    }
    pieces
}

/// A set of pairwise disjoint boxes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RegionSet {
    boxes: Vec<Parallelepiped>,
}

impl RegionSet {
    pub fn empty() -> RegionSet {
        RegionSet { boxes: Vec::new() }
    }

    pub fn single(b: Parallelepiped) -> RegionSet {
        if b.is_empty() {
            RegionSet::empty()
        } else {
            RegionSet { boxes: vec![b] }
        }
    }

    /// Builds a region from boxes the caller knows to be disjoint.
    pub fn from_disjoint(boxes: Vec<Parallelepiped>) -> RegionSet {
        RegionSet {
            boxes: boxes.into_iter().filter(|b| !b.is_empty()).collect(),
        }
    }

    pub fn boxes(&self) -> &[Parallelepiped] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn contains(&self, keys: &[Key]) -> bool {
        self.boxes.iter().any(|b| b.contains(keys))
    }

    pub fn is_disjoint(&self) -> bool {
        self.boxes
            .iter()
            .enumerate()
            .all(|(i, a)| self.boxes[i + 1..].iter().all(|b| a.disjoint(b)))
    }

    pub fn bounding_box(&self) -> Option<Parallelepiped> {
        let mut it = self.boxes.iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, b| acc.hull(b)))
    }

    pub fn intersect(&self, other: &RegionSet) -> RegionSet {
        let mut boxes = Vec::new();
        for a in &self.boxes {
            for b in &other.boxes {
                let c = a.intersect(b);
                if !c.is_empty() {
                    boxes.push(c);
                }
            }
        }
        RegionSet { boxes }
    }

    pub fn union(&self, other: &RegionSet) -> RegionSet {
        let mut out = self.boxes.clone();
        for b in &other.boxes {
            let mut pending = vec![b.clone()];
            let mut i = 0;
            while i < out.len() && !pending.is_empty() {
                let r = &out[i];
                let mut next = Vec::with_capacity(pending.len());
                let mut covered = false;
                for p in pending {
                    if r.disjoint(&p) {
                        next.push(p);
                    } else if p.within(r) {
                        // already covered
                    } else if r.within(&p) {
                        covered = true;
                        next.push(p);
                    } else {
                        next.extend(split(r, &p).into_iter().skip(1));
                    }
                }
                pending = next;
                if covered {
                    out.swap_remove(i);
                } else {
                    i += 1;
                }
            }
            out.extend(pending);
        }
        RegionSet { boxes: out }
    }
}

impl fmt::Display for RegionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.boxes.is_empty() {
            return write!(f, "{{}}");
        }
        for (i, b) in self.boxes.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "<")?;
            for (j, iv) in b.0.iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "[{}, ", hex(&iv.lo))?;
                match &iv.hi {
                    Some(h) => write!(f, "{})", hex(h))?,
                    None => write!(f, "max)")?,
                }
            }
            write!(f, ">")?;
        }
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// The grid space of one relation: key types and the domain box.
#[derive(Debug, Clone)]
pub struct RegionSpace {
    types: Vec<DataType>,
    domain: Parallelepiped,
    /// Maps attribute index to grid dimension.
    dims: HashMap<usize, usize>,
    limit: usize,
}

impl RegionSpace {
    pub fn for_schema(schema: &RelationSchema) -> RegionSpace {
        let types: Vec<DataType> = (0..schema.k()).map(|d| schema.grid_type(d)).collect();
        let domain = Parallelepiped(types.iter().map(|t| Interval::full(t.key_len())).collect());
        RegionSpace {
            types,
            domain,
            dims: schema.grid.iter().enumerate().map(|(d, &a)| (a, d)).collect(),
            limit: DEFAULT_BOX_LIMIT,
        }
    }

    /// Integer space of `k` dimensions restricted to `[lo, hi)` on each,
    /// attribute `i` being dimension `i`.
    pub fn integers(k: usize, lo: i32, hi: i32) -> RegionSpace {
        let iv = Interval {
            lo: DataType::Integer.key_of(&Value::Int(lo)).unwrap(),
            hi: Some(DataType::Integer.key_of(&Value::Int(hi)).unwrap()),
        };
        RegionSpace {
            types: vec![DataType::Integer; k],
            domain: Parallelepiped(vec![iv; k]),
            dims: (0..k).map(|d| (d, d)).collect(),
            limit: DEFAULT_BOX_LIMIT,
        }
    }

    pub fn with_limit(mut self, limit: usize) -> RegionSpace {
        self.limit = limit.max(1);
        self
    }

    pub fn k(&self) -> usize {
        self.types.len()
    }

    pub fn domain(&self) -> &Parallelepiped {
        &self.domain
    }

    pub fn full(&self) -> RegionSet {
        RegionSet::single(self.domain.clone())
    }

    fn slab(&self, dim: usize, iv: Interval) -> RegionSet {
        let mut b = self.domain.clone();
        b.0[dim] = b.0[dim].intersect(&iv);
        RegionSet::single(b)
    }

    /// Region of `dim op constant`.
    pub fn from_basic_term(&self, dim: usize, op: CmpOp, constant: &Value) -> Result<RegionSet> {
        let ty = self.types[dim];
        if !constant.data_type_matches(ty) {
            return Err(Error::ConstantOutOfDomain(format!("{constant} for {ty}")));
        }
        let k = ty.key_of(constant)?;
        let s = successor(&k);
        let zero = vec![0u8; k.len()];
        let iv = |lo: &Key, hi: Option<Key>| Interval::new(lo.clone(), hi);
        Ok(match op {
            CmpOp::Eq => self.slab(dim, iv(&k, s)),
            CmpOp::Lt => self.slab(dim, iv(&zero, Some(k))),
            CmpOp::Le => self.slab(dim, iv(&zero, s)),
            CmpOp::Ge => self.slab(dim, iv(&k, None)),
            CmpOp::Gt => match s {
                Some(s) => self.slab(dim, iv(&s, None)),
                None => RegionSet::empty(),
            },
            CmpOp::Ne => {
                let mut boxes = self.slab(dim, iv(&zero, Some(k))).boxes;
                if let Some(s) = s {
                    boxes.extend(self.slab(dim, iv(&s, None)).boxes);
                }
                RegionSet { boxes }
            }
        })
    }

    /// Region of `dim op v` for an integer dimension and a constant that may
    /// lie outside the 32-bit range.
    fn int_term(&self, dim: usize, op: CmpOp, v: i64) -> Result<RegionSet> {
        if let Ok(v) = i32::try_from(v) {
            return self.from_basic_term(dim, op, &Value::Int(v));
        }
        let above = v > 0;
        let all = match op {
            CmpOp::Ne => true,
            CmpOp::Eq => false,
            CmpOp::Lt | CmpOp::Le => above,
            CmpOp::Gt | CmpOp::Ge => !above,
        };
        Ok(if all { self.full() } else { RegionSet::empty() })
    }

    fn collapse(&self, r: RegionSet) -> (RegionSet, bool) {
        if r.len() > self.limit {
            (RegionSet::single(r.bounding_box().unwrap()), true)
        } else {
            (r, false)
        }
    }

    /// Region and residual of a predicate over relation `rel`. Every tuple
    /// satisfying `expr` lies in the region and satisfies the residual, and
    /// every tuple in the region satisfying the residual satisfies `expr`.
    pub fn from_expr(&self, expr: &Expr, rel: usize) -> Result<(RegionSet, Expr)> {
        self.node(expr.clone().push_not(), rel)
    }

    fn node(&self, e: Expr, rel: usize) -> Result<(RegionSet, Expr)> {
        match e {
            Expr::And(l, r) => {
                let whole = Expr::And(l.clone(), r.clone());
                let (rl, el) = self.node(*l, rel)?;
                let (rr, er) = self.node(*r, rel)?;
                let (region, collapsed) = self.collapse(rl.intersect(&rr));
                if region.is_empty() {
                    return Ok((region, Expr::Bool(false)));
                }
                let residual = if collapsed { whole } else { Expr::and(el, er) };
                Ok((region, residual))
            }
            Expr::Or(l, r) => {
                let whole = Expr::Or(l.clone(), r.clone());
                let (rl, el) = self.node(*l, rel)?;
                let (rr, er) = self.node(*r, rel)?;
                let (region, collapsed) = self.collapse(rl.union(&rr));
                let residual = if collapsed || !el.is_true() || !er.is_true() {
                    whole
                } else {
                    Expr::Bool(true)
                };
                Ok((region, residual))
            }
            leaf => self.leaf(leaf, rel),
        }
    }

    fn leaf(&self, e: Expr, rel: usize) -> Result<(RegionSet, Expr)> {
        match &e {
            Expr::Bool(true) => return Ok((self.full(), Expr::Bool(true))),
            Expr::Bool(false) => return Ok((RegionSet::empty(), Expr::Bool(false))),
            Expr::Cmp(op, l, r) => {
                for c in column_refs(&e) {
                    if c.rel != rel {
                        return Err(Error::Unsupported(format!("term {e} refers to another relation")));
                    }
                }
                if let Some(r) = self.exact_term(*op, l, r)? {
                    return Ok((r, Expr::Bool(true)));
                }
            }
            _ => {}
        }
        Ok((self.full(), e))
    }

    /// Exact region of a comparison when it constrains at most one grid
    /// dimension against a constant, `None` when a residual is needed.
    fn exact_term(&self, op: CmpOp, l: &Expr, r: &Expr) -> Result<Option<RegionSet>> {
        match (l, r) {
            (Expr::Column(c), Expr::Literal(v)) | (Expr::Literal(v), Expr::Column(c))
                if matches!(v, Value::Char(_)) =>
            {
                let op = if matches!(l, Expr::Literal(_)) { op.flip() } else { op };
                return match self.dims.get(&c.attr) {
                    Some(&d) => self.from_basic_term(d, op, v).map(Some),
                    None => Ok(None),
                };
            }
            (Expr::Column(a), Expr::Column(b)) if a == b => {
                let t = matches!(op, CmpOp::Eq | CmpOp::Le | CmpOp::Ge);
                return Ok(Some(if t { self.full() } else { RegionSet::empty() }));
            }
            (Expr::Literal(a), Expr::Literal(b)) => {
                let t = a.sql_cmp(b).is_some_and(|o| op.holds(o));
                return Ok(Some(if t { self.full() } else { RegionSet::empty() }));
            }
            _ => {}
        }
        // linear integer form: sum(coef * col) + constant  op  0
        let mut form = Linear::default();
        if !form.add(l, 1) || !form.add(r, -1) {
            return Ok(None);
        }
        form.coefs.retain(|_, c| *c != 0);
        match form.coefs.len() {
            0 => {
                let t = op.holds(form.constant.cmp(&0));
                Ok(Some(if t { self.full() } else { RegionSet::empty() }))
            }
            1 => {
                let (&col, &coef) = form.coefs.iter().next().unwrap();
                let Some(&d) = self.dims.get(&col.attr) else {
                    return Ok(None);
                };
                if self.types[d] != DataType::Integer {
                    return Ok(None);
                }
                match coef {
                    // col + k op 0  =>  col op -k
                    1 => self.int_term(d, op, form.constant.saturating_neg()).map(Some),
                    // -col + k op 0  =>  col op' k
                    -1 => self.int_term(d, op.flip(), form.constant).map(Some),
                    _ => Ok(None),
                }
            }
            _ => Ok(None),
        }
    }
}

fn column_refs(e: &Expr) -> Vec<ColumnRef> {
    let mut v = Vec::new();
    e.columns(&mut v);
    v
}

#[derive(Default)]
struct Linear {
    coefs: HashMap<ColumnRef, i64>,
    constant: i64,
}

impl Linear {
    fn add(&mut self, e: &Expr, sign: i64) -> bool {
        match e {
            Expr::Literal(Value::Int(v)) => {
                self.constant = self.constant.saturating_add(sign * *v as i64);
                true
            }
            Expr::Column(c) => {
                *self.coefs.entry(*c).or_insert(0) += sign;
                true
            }
            Expr::Arith(op, l, r) => {
                let rs = if *op == ArithOp::Add { sign } else { -sign };
                self.add(l, sign) && self.add(r, rs)
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(v: i32) -> Key {
        DataType::Integer.key_of(&Value::Int(v)).unwrap()
    }

    fn bx(ivs: &[(i32, i32)]) -> Parallelepiped {
        Parallelepiped::new(ivs.iter().map(|&(l, h)| Interval::new(key(l), Some(key(h)))).collect())
    }

    fn members(r: &RegionSet, k: usize, n: i32) -> Vec<Vec<i32>> {
        let mut out = Vec::new();
        let mut p = vec![0; k];
        loop {
            let keys: Vec<Key> = p.iter().map(|&v| key(v)).collect();
            if r.contains(&keys) {
                out.push(p.clone());
            }
            let mut i = 0;
            while i < k {
                p[i] += 1;
                if p[i] < n {
                    break;
                }
                p[i] = 0;
                i += 1;
            }
            if i == k {
                return out;
            }
        }
    }

    #[test]
    fn basic_terms() {
        let s = RegionSpace::integers(3, 0, 10);
        let eq = s.from_basic_term(0, CmpOp::Eq, &Value::Int(5)).unwrap();
        assert_eq!(eq.boxes(), &[bx(&[(5, 6), (0, 10), (0, 10)])]);
        let ne = s.from_basic_term(0, CmpOp::Ne, &Value::Int(5)).unwrap();
        assert_eq!(
            ne.boxes(),
            &[bx(&[(0, 5), (0, 10), (0, 10)]), bx(&[(6, 10), (0, 10), (0, 10)])]
        );
        assert!(s.from_basic_term(0, CmpOp::Lt, &Value::Int(0)).unwrap().is_empty());
        assert!(matches!(
            s.from_basic_term(0, CmpOp::Lt, &Value::Char("x".into())),
            Err(Error::ConstantOutOfDomain(_))
        ));
    }

    #[test]
    fn intersect_boxes() {
        let a = RegionSet::single(bx(&[(0, 10), (0, 10)]));
        let b = RegionSet::single(bx(&[(5, 20), (5, 20)]));
        assert_eq!(a.intersect(&b).boxes(), &[bx(&[(5, 10), (5, 10)])]);
        let c = RegionSet::single(bx(&[(10, 20), (0, 10)]));
        assert!(a.intersect(&c).is_empty());
    }

    #[test]
    fn split_cases() {
        let c1 = bx(&[(0, 5), (0, 5)]);
        let c2 = bx(&[(2, 7), (2, 7)]);
        let out = split(&c1, &c2);
        assert_eq!(out[0], c1);
        assert!(out.len() - 1 <= 3);
        let r = RegionSet::from_disjoint(out);
        assert!(r.is_disjoint());
        let want: Vec<_> = members(&RegionSet::single(c1.clone()), 2, 8)
            .into_iter()
            .chain(members(&RegionSet::single(c2.clone()), 2, 8))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        assert_eq!(members(&r, 2, 8), {
            let mut w = want;
            w.sort_by(|a, b| (a[1], a[0]).cmp(&(b[1], b[0])));
            w
        });
        assert_eq!(split(&c1, &bx(&[(1, 3), (1, 3)])), vec![c1.clone()]);
        assert_eq!(split(&c1, &c1), vec![c1.clone()]);
    }

    #[test]
    fn union_idempotent() {
        let h = RegionSet::single(bx(&[(0, 4), (2, 6)])).union(&RegionSet::single(bx(&[(3, 8), (0, 3)])));
        assert!(h.is_disjoint());
        let u = h.union(&h);
        assert!(u.is_disjoint());
        assert_eq!(members(&u, 2, 10), members(&h, 2, 10));
    }

    #[test]
    fn de_morgan_example() {
        let s = RegionSpace::integers(2, 0, 64);
        let e = Expr::not(Expr::and(
            Expr::cmp(CmpOp::Lt, Expr::col(0, 0), Expr::int(20)),
            Expr::cmp(CmpOp::Eq, Expr::col(0, 1), Expr::int(0)),
        ));
        let (r, res) = s.from_expr(&e, 0).unwrap();
        assert!(res.is_true());
        let ge = s.from_basic_term(0, CmpOp::Ge, &Value::Int(20)).unwrap();
        let ne = s.from_basic_term(1, CmpOp::Ne, &Value::Int(0)).unwrap();
        assert_eq!(members(&r, 2, 64), members(&ge.union(&ne), 2, 64));
    }

    #[test]
    fn inter_attribute_terms() {
        let s = RegionSpace::integers(2, 0, 10);
        let lt = Expr::cmp(CmpOp::Lt, Expr::col(0, 0), Expr::col(0, 1));
        let (r, res) = s.from_expr(&lt, 0).unwrap();
        assert_eq!(r, s.full());
        assert_eq!(res, lt);
        let same = Expr::cmp(CmpOp::Eq, Expr::col(0, 0), Expr::col(0, 0));
        let (r, res) = s.from_expr(&same, 0).unwrap();
        assert_eq!(r, s.full());
        assert!(res.is_true());
        let arith = Expr::cmp(
            CmpOp::Lt,
            Expr::Arith(ArithOp::Add, Box::new(Expr::col(0, 0)), Box::new(Expr::int(1))),
            Expr::int(4),
        );
        let (r, res) = s.from_expr(&arith, 0).unwrap();
        assert!(res.is_true());
        assert_eq!(r, s.from_basic_term(0, CmpOp::Lt, &Value::Int(3)).unwrap());
        let contradiction = Expr::and(
            Expr::cmp(CmpOp::Eq, Expr::col(0, 0), Expr::int(3)),
            Expr::cmp(CmpOp::Eq, Expr::col(0, 0), Expr::int(4)),
        );
        assert!(s.from_expr(&contradiction, 0).unwrap().0.is_empty());
    }

    #[test]
    fn box_limit_collapses() {
        let s = RegionSpace::integers(1, 0, 100).with_limit(4);
        let mut e = Expr::Bool(false);
        for v in [1, 10, 20, 30, 40, 50] {
            e = Expr::or(e, Expr::cmp(CmpOp::Eq, Expr::col(0, 0), Expr::int(v)));
        }
        let (r, res) = s.from_expr(&e, 0).unwrap();
        assert!(r.len() <= 4);
        assert_eq!(res, e);
    }
}
