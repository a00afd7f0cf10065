//! Statement execution over open grid files.

use std::cmp::Ordering;

use super::analyze::BoundSelect;
use super::plan::{Group, Plan, Relations};
use crate::error::Result;
use crate::expr::Expr;
use crate::value::{Tuple, Value};

type Row = Vec<Option<Tuple>>;

fn cell(row: &Row, rel: usize, attr: usize) -> &Value {
    &row[rel].as_ref().expect("relation bound")[attr]
}

fn holds(terms: &[Expr], row: &Row) -> bool {
    terms.iter().all(|t| t.eval(&|c| cell(row, c.rel, c.attr)))
}

fn key_cmp(a: &Value, b: &Value) -> Ordering {
    a.sql_cmp(b).unwrap_or(Ordering::Equal)
}

/// Tuples of one relation sorted on `attr`, read in key order when the
/// attribute is a grid dimension.
fn sorted_input(plan: &Plan, sel: &BoundSelect, files: &mut Relations, rel: usize, attr: usize) -> Result<Vec<Tuple>> {
    let rp = &plan.rels[rel];
    let f = files.get_mut(&rp.name).expect("relation is open");
    let mut ts = match sel.tables[rel].schema.grid_dim(attr) {
        Some(d) => f.ordered_scan(d, &rp.region, &rp.residual)?,
        None => {
            let mut v = Vec::new();
            for &u in &rp.units {
                v.extend(f.read_unit(&rp.region, u, &rp.residual)?);
            }
            v
        }
    };
    ts.sort_by(|a, b| key_cmp(&a[attr], &b[attr]));
    Ok(ts)
}

/// Multi-way merge join of a group on its designated attributes.
fn merge_group(plan: &Plan, sel: &BoundSelect, files: &mut Relations, g: &Group) -> Result<Vec<Row>> {
    let n = sel.tables.len();
    let mut inputs = Vec::with_capacity(g.members.len());
    for &(r, a) in &g.members {
        inputs.push(sorted_input(plan, sel, files, r, a)?);
    }
    let attrs: Vec<usize> = g.members.iter().map(|m| m.1).collect();
    let mut at = vec![0usize; inputs.len()];
    let mut out = Vec::new();
    'merge: loop {
        for (i, v) in inputs.iter().enumerate() {
            if at[i] >= v.len() {
                break 'merge;
            }
        }
        let mut max = &inputs[0][at[0]][attrs[0]];
        for i in 1..inputs.len() {
            let v = &inputs[i][at[i]][attrs[i]];
            if key_cmp(v, max) == Ordering::Greater {
                max = v;
            }
        }
        let max = max.clone();
        let mut aligned = true;
        for i in 0..inputs.len() {
            while at[i] < inputs[i].len() && key_cmp(&inputs[i][at[i]][attrs[i]], &max) == Ordering::Less {
                at[i] += 1;
            }
            if at[i] >= inputs[i].len() {
                break 'merge;
            }
            if key_cmp(&inputs[i][at[i]][attrs[i]], &max) != Ordering::Equal {
                aligned = false;
            }
        }
        if !aligned {
            continue;
        }
        let ends: Vec<usize> = (0..inputs.len())
            .map(|i| {
                let mut e = at[i];
                while e < inputs[i].len() && key_cmp(&inputs[i][e][attrs[i]], &max) == Ordering::Equal {
                    e += 1;
                }
                e
            })
            .collect();
        // cross product of the equal-key runs
        let mut idx = at.clone();
        loop {
            let mut row: Row = vec![None; n];
            for (i, &(r, _)) in g.members.iter().enumerate() {
                row[r] = Some(inputs[i][idx[i]].clone());
            }
            out.push(row);
            let mut i = 0;
            while i < idx.len() {
                idx[i] += 1;
                if idx[i] < ends[i] {
                    break;
                }
                idx[i] = at[i];
                i += 1;
            }
            if i == idx.len() {
                break;
            }
        }
        at = ends;
    }
    Ok(out)
}

struct Runner<'a> {
    plan: &'a Plan,
    sel: &'a BoundSelect,
    merged: Vec<Option<Vec<Row>>>,
    out: Vec<Row>,
}

impl Runner<'_> {
    /// Extends every row of `batch` with the groups from `level` on.
    /// Scanned relations are re-read bucket by bucket for each outer batch.
    fn nest(&mut self, files: &mut Relations, level: usize, batch: Vec<Row>) -> Result<()> {
        if level == self.plan.groups.len() {
            self.out.extend(batch);
            return Ok(());
        }
        let g = &self.plan.groups[level];
        let terms = &self.plan.level_terms[level];
        if g.is_merge() {
            if self.merged[level].is_none() {
                self.merged[level] = Some(merge_group(self.plan, self.sel, files, g)?);
            }
            let inner = self.merged[level].as_ref().unwrap();
            let next = combine(&batch, inner, g, terms);
            if !next.is_empty() {
                self.nest(files, level + 1, next)?;
            }
            return Ok(());
        }
        let r = g.members[0].0;
        let rp = &self.plan.rels[r];
        for &u in &rp.units {
            let ts = files
                .get_mut(&rp.name)
                .expect("relation is open")
                .read_unit(&rp.region, u, &rp.residual)?;
            if ts.is_empty() {
                continue;
            }
            let n = self.sel.tables.len();
            let inner: Vec<Row> = ts
                .into_iter()
                .map(|t| {
                    let mut row = vec![None; n];
                    row[r] = Some(t);
                    row
                })
                .collect();
            let next = combine(&batch, &inner, g, terms);
            if !next.is_empty() {
                self.nest(files, level + 1, next)?;
            }
        }
        Ok(())
    }
}

fn combine(outer: &[Row], inner: &[Row], g: &Group, terms: &[Expr]) -> Vec<Row> {
    let mut out = Vec::new();
    for o in outer {
        for i in inner {
            let mut row = o.clone();
            for &(r, _) in &g.members {
                row[r] = i[r].clone();
            }
            if holds(terms, &row) {
                out.push(row);
            }
        }
    }
    out
}

/// Rows of a SELECT, projected and ordered.
pub fn run_select(sel: &BoundSelect, plan: &Plan, files: &mut Relations) -> Result<Vec<Vec<Value>>> {
    if plan.empty {
        return Ok(Vec::new());
    }
    let n = sel.tables.len();
    let mut rows: Vec<Row>;
    let mut ordered = false;
    match sel.order_by {
        Some((c, _)) if n == 1 && sel.tables[0].schema.grid_dim(c.attr).is_some() => {
            let rp = &plan.rels[0];
            let d = sel.tables[0].schema.grid_dim(c.attr).unwrap();
            let f = files.get_mut(&rp.name).expect("relation is open");
            rows = f
                .ordered_scan(d, &rp.region, &rp.residual)?
                .into_iter()
                .map(|t| vec![Some(t)])
                .collect();
            ordered = true;
        }
        _ => {
            let mut runner = Runner {
                plan,
                sel,
                merged: vec![None; plan.groups.len()],
                out: Vec::new(),
            };
            runner.nest(files, 0, vec![vec![None; n]])?;
            rows = runner.out;
        }
    }
    if let Some((c, desc)) = sel.order_by {
        if !ordered {
            rows.sort_by(|a, b| key_cmp(cell(a, c.rel, c.attr), cell(b, c.rel, c.attr)));
        }
        if desc {
            rows.reverse();
        }
    }
    Ok(rows
        .iter()
        .map(|row| {
            sel.projection
                .iter()
                .map(|c| cell(row, c.rel, c.attr).clone())
                .collect()
        })
        .collect())
}
