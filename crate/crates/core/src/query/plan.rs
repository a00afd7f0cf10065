//! Join planning: relations connected by equality terms on a single
//! attribute each are grouped for a multi-way merge join; groups are
//! combined by nested iteration.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::analyze::BoundSelect;
use crate::error::Result;
use crate::expr::{CmpOp, ColumnRef, Expr};
use crate::gridfile::{GridFile, ScanUnit};
use crate::region::RegionSet;

pub type Relations = BTreeMap<String, GridFile>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExecOptions {
    /// Put every relation in its own group, disabling merge joins.
    pub force_nested: bool,
}

/// Access path of one relation of the FROM list.
#[derive(Debug, Clone)]
pub struct RelPlan {
    pub name: String,
    pub label: String,
    pub region: RegionSet,
    /// Part of the local predicate the region does not capture.
    pub residual: Expr,
    /// Buckets to read for the region.
    pub units: Vec<ScanUnit>,
}

/// Relations joined together; a single member means a plain scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    /// `(relation, join attribute)`; the attribute is unused for singletons.
    pub members: Vec<(usize, usize)>,
}

impl Group {
    pub fn is_merge(&self) -> bool {
        self.members.len() > 1
    }

    fn attr_of(&self, rel: usize) -> Option<usize> {
        self.members.iter().find(|m| m.0 == rel).map(|m| m.1)
    }
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub rels: Vec<RelPlan>,
    /// Groups in nesting order, outermost first.
    pub groups: Vec<Group>,
    /// Terms over several relations checked once all of them are bound,
    /// indexed by group position.
    pub level_terms: Vec<Vec<Expr>>,
    /// A constant conjunct is false.
    pub empty: bool,
    /// Estimated page reads of the chosen plan.
    pub cost: u64,
    /// Estimated page reads with nested iteration only.
    pub nested_cost: u64,
}

/// Equality between columns of two different relations.
pub fn equijoin(e: &Expr) -> Option<(ColumnRef, ColumnRef)> {
    match e {
        Expr::Cmp(CmpOp::Eq, l, r) => match (&**l, &**r) {
            (Expr::Column(a), Expr::Column(b)) if a.rel != b.rel => Some((*a, *b)),
            _ => None,
        },
        _ => None,
    }
}

/// Conjunctive terms of a filter with negations pushed to the comparisons.
pub fn terms(filter: &Expr) -> Vec<Expr> {
    filter.clone().push_not().conjuncts()
}

/// Every term over both `a.rel` and `b.rel` is `a = b` or `b = a`.
fn compatible(terms: &[Expr], a: ColumnRef, b: ColumnRef) -> bool {
    terms.iter().all(|t| {
        let rels = t.relations();
        if !(rels.contains(&a.rel) && rels.contains(&b.rel)) {
            return true;
        }
        matches!(equijoin(t), Some((x, y)) if (x, y) == (a, b) || (x, y) == (b, a))
    })
}

/// Greedy grouping in term order.
pub fn group_relations(terms: &[Expr], n: usize) -> Vec<Group> {
    let mut groups: Vec<Group> = Vec::new();
    let mut of: Vec<Option<usize>> = vec![None; n];
    let fits = |g: &Group, c: ColumnRef| {
        g.members
            .iter()
            .all(|&(r, a)| compatible(terms, ColumnRef { rel: r, attr: a }, c))
    };
    for t in terms {
        let Some((a, b)) = equijoin(t) else { continue };
        match (of[a.rel], of[b.rel]) {
            (None, None) => {
                if compatible(terms, a, b) {
                    of[a.rel] = Some(groups.len());
                    of[b.rel] = Some(groups.len());
                    groups.push(Group {
                        members: vec![(a.rel, a.attr), (b.rel, b.attr)],
                    });
                }
            }
            (Some(g), None) | (None, Some(g)) => {
                let (inside, outside) = if of[a.rel].is_some() { (a, b) } else { (b, a) };
                if groups[g].attr_of(inside.rel) == Some(inside.attr) && fits(&groups[g], outside) {
                    of[outside.rel] = Some(g);
                    groups[g].members.push((outside.rel, outside.attr));
                }
            }
            (Some(g1), Some(g2)) if g1 != g2 => {
                let ok = groups[g1].attr_of(a.rel) == Some(a.attr)
                    && groups[g2].attr_of(b.rel) == Some(b.attr)
                    && groups[g2]
                        .members
                        .iter()
                        .all(|&(r, at)| fits(&groups[g1], ColumnRef { rel: r, attr: at }));
                if ok {
                    let moved = std::mem::take(&mut groups[g2].members);
                    for &(r, _) in &moved {
                        of[r] = Some(g1);
                    }
                    groups[g1].members.extend(moved);
                }
            }
            _ => {}
        }
    }
    groups.retain(|g| !g.members.is_empty());
    for (r, g) in of.iter().enumerate() {
        if g.is_none() {
            groups.push(Group { members: vec![(r, 0)] });
        }
    }
    for g in &mut groups {
        g.members.sort_unstable();
    }
    groups
}

/// Checks a grouping against the conditions for merge-joinable groups.
/// Membership in a group is connected through equality terms on the
/// designated attributes.
pub fn check_grouping(terms: &[Expr], groups: &[Group], n: usize) -> std::result::Result<(), String> {
    let mut count = vec![0usize; n];
    for g in groups {
        for &(r, _) in &g.members {
            if r >= n {
                return Err(format!("relation {r} out of range"));
            }
            count[r] += 1;
        }
    }
    if let Some(r) = count.iter().position(|&c| c != 1) {
        return Err(format!("relation {r} is in {} groups", count[r]));
    }
    for g in groups.iter().filter(|g| g.is_merge()) {
        let attr = |r: usize| g.attr_of(r);
        let member = |r: usize| attr(r).is_some();
        // connectivity through designated equalities
        let mut reached = vec![g.members[0].0];
        let mut grew = true;
        while grew {
            grew = false;
            for t in terms {
                if let Some((a, b)) = equijoin(t) {
                    if attr(a.rel) == Some(a.attr) && attr(b.rel) == Some(b.attr) {
                        for (x, y) in [(a.rel, b.rel), (b.rel, a.rel)] {
                            if reached.contains(&x) && !reached.contains(&y) {
                                reached.push(y);
                                grew = true;
                            }
                        }
                    }
                }
            }
        }
        if reached.len() != g.members.len() {
            return Err(format!("group {:?} is not connected by equality terms", g.members));
        }
        for t in terms {
            let mut cols = Vec::new();
            t.columns(&mut cols);
            let inside: Vec<ColumnRef> = cols.iter().copied().filter(|c| member(c.rel)).collect();
            let mut rels: Vec<usize> = inside.iter().map(|c| c.rel).collect();
            rels.sort_unstable();
            rels.dedup();
            if rels.len() < 2 {
                continue;
            }
            // comparisons other than designated equality
            if let Expr::Cmp(op, l, r) = t {
                if let (Expr::Column(x), Expr::Column(y)) = (&**l, &**r) {
                    if *op != CmpOp::Eq || attr(x.rel) != Some(x.attr) || attr(y.rel) != Some(y.attr) {
                        return Err(format!("term {t} links group members on other terms"));
                    }
                    continue;
                }
            }
            // any other term touching two members: other attributes or
            // arithmetic across members
            if inside.iter().any(|c| attr(c.rel) != Some(c.attr)) {
                return Err(format!("term {t} joins group members on non-join attributes"));
            }
            return Err(format!("term {t} mixes group members in an expression"));
        }
    }
    Ok(())
}

fn merge_cost(b: u64, sorted: bool) -> u64 {
    if sorted {
        b
    } else {
        b + b * (b.max(2) as f64).log2().ceil() as u64
    }
}

/// Σ_i Π_{j<=i} B_j.
pub fn nested_estimate(buckets: &[u64]) -> u64 {
    let mut p = 1u64;
    let mut total = 0u64;
    for &b in buckets {
        p = p.saturating_mul(b);
        total = total.saturating_add(p);
    }
    total
}

pub fn plan_select(sel: &BoundSelect, files: &mut Relations, opts: ExecOptions) -> Result<Plan> {
    let n = sel.tables.len();
    let terms = terms(&sel.filter);
    let mut empty = false;
    let mut local: Vec<Vec<Expr>> = vec![Vec::new(); n];
    let mut multi: Vec<Expr> = Vec::new();
    for t in &terms {
        let rels = t.relations();
        match rels.len() {
            0 => {
                if !t.eval(&|_| -> &crate::value::Value { unreachable!("constant term") }) {
                    empty = true;
                }
            }
            1 => local[rels[0]].push(t.clone()),
            _ => multi.push(t.clone()),
        }
    }
    let mut rels = Vec::with_capacity(n);
    for (i, t) in sel.tables.iter().enumerate() {
        let f = files.get_mut(&t.schema.name).expect("relation is open");
        let pred = Expr::conjoin(local[i].iter().cloned());
        let (region, residual) = f.space().from_expr(&pred, i)?;
        let units = if empty { Vec::new() } else { f.plan_scan(&region)? };
        rels.push(RelPlan {
            name: t.schema.name.clone(),
            label: t.label.clone(),
            region,
            residual,
            units,
        });
    }
    let mut groups = if opts.force_nested {
        (0..n).map(|r| Group { members: vec![(r, 0)] }).collect()
    } else {
        group_relations(&terms, n)
    };
    let b = |r: usize| rels[r].units.len() as u64;
    groups.sort_by_key(|g| g.members.iter().map(|m| b(m.0)).sum::<u64>());

    let pos_of = |r: usize| groups.iter().position(|g| g.attr_of(r).is_some()).unwrap();
    let mut level_terms = vec![Vec::new(); groups.len()];
    for t in multi {
        if let Some((a, c)) = equijoin(&t) {
            let g = pos_of(a.rel);
            if g == pos_of(c.rel)
                && groups[g].is_merge()
                && groups[g].attr_of(a.rel) == Some(a.attr)
                && groups[g].attr_of(c.rel) == Some(c.attr)
            {
                continue;
            }
        }
        let level = t.relations().into_iter().map(pos_of).max().unwrap();
        level_terms[level].push(t);
    }

    let mut cost = 0u64;
    let mut outer = 1u64;
    for g in &groups {
        if g.is_merge() {
            for &(r, a) in &g.members {
                let sorted = sel.tables[r].schema.grid_dim(a).is_some();
                cost = cost.saturating_add(merge_cost(b(r), sorted));
            }
        } else {
            let br = b(g.members[0].0);
            cost = cost.saturating_add(outer.saturating_mul(br));
            outer = outer.saturating_mul(br);
        }
    }
    let mut all: Vec<u64> = (0..n).map(b).collect();
    all.sort_unstable();
    Ok(Plan {
        nested_cost: nested_estimate(&all),
        rels,
        groups,
        level_terms,
        empty,
        cost,
    })
}

/// Renders a region using attribute names and decoded bounds.
fn describe_region(f: &GridFile, region: &RegionSet) -> String {
    let s = f.schema();
    if region.is_empty() {
        return "empty".into();
    }
    let full = f.space().domain().clone();
    let mut parts = Vec::new();
    for bx in region.boxes() {
        let mut conds = Vec::new();
        for (d, iv) in bx.intervals().iter().enumerate() {
            if *iv == full.intervals()[d] {
                continue;
            }
            let ty = s.grid_type(d);
            let name = &s.attributes[s.grid[d]].name;
            let lo = ty.value_of_key(&iv.lo);
            let hi = iv
                .hi
                .as_ref()
                .map_or("+inf".to_string(), |h| ty.value_of_key(h).to_string());
            conds.push(format!("{name} in [{lo}, {hi})"));
        }
        parts.push(if conds.is_empty() {
            "all".into()
        } else {
            conds.join(" and ")
        });
    }
    parts.join(" | ")
}

pub fn explain(sel: &BoundSelect, plan: &Plan, files: &Relations) -> String {
    let mut out = String::new();
    if plan.empty {
        out.push_str("constant false predicate: no relation is read\n");
    }
    for (i, g) in plan.groups.iter().enumerate() {
        if g.is_merge() {
            let keys: Vec<String> = g
                .members
                .iter()
                .map(|&(r, a)| format!("{}.{}", plan.rels[r].label, sel.tables[r].schema.attributes[a].name))
                .collect();
            let _ = writeln!(out, "group {}: merge join on {}", i + 1, keys.join(" = "));
        } else {
            let _ = writeln!(out, "group {}: scan", i + 1);
        }
        for &(r, _) in &g.members {
            let rp = &plan.rels[r];
            let f = &files[&rp.name];
            let _ = writeln!(
                out,
                "  {} ({}): {} buckets, region {}",
                rp.label,
                rp.name,
                rp.units.len(),
                describe_region(f, &rp.region)
            );
            if !rp.residual.is_true() {
                let _ = writeln!(out, "    residual {}", rp.residual);
            }
        }
        for t in &plan.level_terms[i] {
            let _ = writeln!(out, "  filter {t}");
        }
    }
    if plan.groups.len() > 1 {
        let _ = writeln!(out, "groups combined by nested iteration");
    }
    let _ = writeln!(
        out,
        "estimated reads: {} (nested only: {})",
        plan.cost, plan.nested_cost
    );
    out
}
