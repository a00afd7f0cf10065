//! Helpers shared by the integration tests: seeded generators and
//! independent reference implementations.

#![allow(dead_code)]

use gridrel::expr::ArithOp;
use gridrel::{Attribute, CmpOp, DataType, Expr, RelationSchema, Tuple, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integer relation `A0..An-1`, gridded on `grid`.
pub fn int_schema(name: &str, n: usize, grid: Vec<usize>, capacity: usize) -> RelationSchema {
    let attrs = (0..n)
        .map(|i| Attribute::new(&format!("A{i}"), DataType::Integer))
        .collect();
    RelationSchema::new(name, attrs, 4096)
        .with_grid(grid)
        .with_capacity(capacity)
}

pub fn random_tuple(r: &mut ChaCha8Rng, n: usize, domain: i32) -> Tuple {
    Tuple((0..n).map(|_| Value::Int(r.random_range(0..domain))).collect())
}

pub fn sorted<T: Ord>(mut v: Vec<T>) -> Vec<T> {
    v.sort();
    v
}

fn cmp_op(r: &mut ChaCha8Rng) -> CmpOp {
    [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge][r.random_range(0..6)]
}

/// Random predicate over integer columns `0..n` of relation `rel`, with
/// constants drawn slightly beyond `[0, domain)`.
pub fn random_expr(r: &mut ChaCha8Rng, rel: usize, n: usize, domain: i32, depth: u32) -> Expr {
    let lit = |r: &mut ChaCha8Rng| Expr::int(r.random_range(-2..domain + 2));
    let col = |r: &mut ChaCha8Rng| Expr::col(rel, r.random_range(0..n));
    if depth == 0 || r.random_bool(0.3) {
        return match r.random_range(0..10) {
            0 => Expr::cmp(cmp_op(r), col(r), col(r)),
            1 => {
                let op = if r.random_bool(0.5) { ArithOp::Add } else { ArithOp::Sub };
                let lhs = Expr::Arith(op, Box::new(col(r)), Box::new(lit(r)));
                Expr::cmp(cmp_op(r), lhs, lit(r))
            }
            2 => Expr::cmp(cmp_op(r), lit(r), col(r)),
            3 if r.random_bool(0.2) => Expr::Bool(r.random_bool(0.5)),
            _ => Expr::cmp(cmp_op(r), col(r), lit(r)),
        };
    }
    match r.random_range(0..5) {
        0 | 1 => Expr::And(
            Box::new(random_expr(r, rel, n, domain, depth - 1)),
            Box::new(random_expr(r, rel, n, domain, depth - 1)),
        ),
        2 | 3 => Expr::Or(
            Box::new(random_expr(r, rel, n, domain, depth - 1)),
            Box::new(random_expr(r, rel, n, domain, depth - 1)),
        ),
        _ => Expr::not(random_expr(r, rel, n, domain, depth - 1)),
    }
}

/// Direct evaluation of a single-relation predicate, written independently
/// of the engine's evaluator.
pub fn eval_ref(e: &Expr, t: &Tuple) -> bool {
    fn num(e: &Expr, t: &Tuple) -> i64 {
        match e {
            Expr::Literal(Value::Int(v)) => *v as i64,
            Expr::Column(c) => match &t.0[c.attr] {
                Value::Int(v) => *v as i64,
                other => panic!("non-integer column {other:?}"),
            },
            Expr::Arith(ArithOp::Add, l, r) => num(l, t) + num(r, t),
            Expr::Arith(ArithOp::Sub, l, r) => num(l, t) - num(r, t),
            other => panic!("not numeric: {other:?}"),
        }
    }
    match e {
        Expr::Bool(b) => *b,
        Expr::Not(x) => !eval_ref(x, t),
        Expr::And(l, r) => eval_ref(l, t) && eval_ref(r, t),
        Expr::Or(l, r) => eval_ref(l, t) || eval_ref(r, t),
        Expr::Cmp(op, l, r) => {
            let (a, b) = (num(l, t), num(r, t));
            match op {
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
            }
        }
        other => panic!("not boolean: {other:?}"),
    }
}
