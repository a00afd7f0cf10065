//! Resolved boolean/arithmetic expressions over relation columns.

use std::cmp::Ordering;
use std::fmt;

use crate::value::{cmp_padded, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    /// The operator `op'` with `!(a op b) == (a op' b)`.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    /// The operator `op'` with `(a op b) == (b op' a)`.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            o => o,
        }
    }

    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
}

/// Column `attr` of the `rel`-th relation in a statement's FROM list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnRef {
    pub rel: usize,
    pub attr: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Bool(bool),
    Literal(Value),
    Column(ColumnRef),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

/// A scalar produced while evaluating an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scalar<'a> {
    Int(i64),
    Str(&'a str),
}

impl Scalar<'_> {
    fn cmp(&self, other: &Scalar<'_>) -> Ordering {
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => a.cmp(b),
            (Scalar::Str(a), Scalar::Str(b)) => cmp_padded(a.as_bytes(), b.as_bytes()),
            // analysis rejects mixed comparisons
            (Scalar::Int(_), Scalar::Str(_)) => Ordering::Less,
            (Scalar::Str(_), Scalar::Int(_)) => Ordering::Greater,
        }
    }
}

impl Expr {
    pub fn cmp(op: CmpOp, l: Expr, r: Expr) -> Expr {
        Expr::Cmp(op, Box::new(l), Box::new(r))
    }

    pub fn and(l: Expr, r: Expr) -> Expr {
        match (l, r) {
            (Expr::Bool(true), e) | (e, Expr::Bool(true)) => e,
            (Expr::Bool(false), _) | (_, Expr::Bool(false)) => Expr::Bool(false),
            (l, r) => Expr::And(Box::new(l), Box::new(r)),
        }
    }

    pub fn or(l: Expr, r: Expr) -> Expr {
        match (l, r) {
            (Expr::Bool(false), e) | (e, Expr::Bool(false)) => e,
            (Expr::Bool(true), _) | (_, Expr::Bool(true)) => Expr::Bool(true),
            (l, r) => Expr::Or(Box::new(l), Box::new(r)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn col(rel: usize, attr: usize) -> Expr {
        Expr::Column(ColumnRef { rel, attr })
    }

    pub fn int(v: i32) -> Expr {
        Expr::Literal(Value::Int(v))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Expr::Bool(true))
    }

    /// Conjunction of all expressions, `true` when empty.
    pub fn conjoin(terms: impl IntoIterator<Item = Expr>) -> Expr {
        terms.into_iter().fold(Expr::Bool(true), Expr::and)
    }

    /// Splits nested ANDs into their operands.
    pub fn conjuncts(self) -> Vec<Expr> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            match e {
                Expr::And(l, r) => {
                    stack.push(*r);
                    stack.push(*l);
                }
                Expr::Bool(true) => {}
                e => out.push(e),
            }
        }
        out
    }

    /// Pushes every NOT down to the comparisons, which absorb it.
    pub fn push_not(self) -> Expr {
        self.push(false)
    }

    fn push(self, negated: bool) -> Expr {
        match self {
            Expr::Not(e) => e.push(!negated),
            Expr::And(l, r) if negated => Expr::Or(Box::new(l.push(true)), Box::new(r.push(true))),
            Expr::Or(l, r) if negated => Expr::And(Box::new(l.push(true)), Box::new(r.push(true))),
            Expr::And(l, r) => Expr::And(Box::new(l.push(false)), Box::new(r.push(false))),
            Expr::Or(l, r) => Expr::Or(Box::new(l.push(false)), Box::new(r.push(false))),
            Expr::Cmp(op, l, r) if negated => Expr::Cmp(op.negate(), l, r),
            Expr::Bool(b) => Expr::Bool(b != negated),
            e => e,
        }
    }

    /// Every column referenced, in tree order.
    pub fn columns(&self, out: &mut Vec<ColumnRef>) {
        match self {
            Expr::Column(c) => out.push(*c),
            Expr::Bool(_) | Expr::Literal(_) => {}
            Expr::Not(e) => e.columns(out),
            Expr::Arith(_, l, r) | Expr::Cmp(_, l, r) | Expr::And(l, r) | Expr::Or(l, r) => {
                l.columns(out);
                r.columns(out);
            }
        }
    }

    /// Set of relation indices referenced.
    pub fn relations(&self) -> Vec<usize> {
        let mut cols = Vec::new();
        self.columns(&mut cols);
        let mut rels: Vec<usize> = cols.into_iter().map(|c| c.rel).collect();
        rels.sort_unstable();
        rels.dedup();
        rels
    }

    /// Rewrites column references with `f`.
    pub fn map_columns(&self, f: &impl Fn(ColumnRef) -> ColumnRef) -> Expr {
        match self {
            Expr::Column(c) => Expr::Column(f(*c)),
            Expr::Bool(_) | Expr::Literal(_) => self.clone(),
            Expr::Not(e) => Expr::Not(Box::new(e.map_columns(f))),
            Expr::Arith(op, l, r) => Expr::Arith(*op, Box::new(l.map_columns(f)), Box::new(r.map_columns(f))),
            Expr::Cmp(op, l, r) => Expr::Cmp(*op, Box::new(l.map_columns(f)), Box::new(r.map_columns(f))),
            Expr::And(l, r) => Expr::And(Box::new(l.map_columns(f)), Box::new(r.map_columns(f))),
            Expr::Or(l, r) => Expr::Or(Box::new(l.map_columns(f)), Box::new(r.map_columns(f))),
        }
    }

    pub fn scalar<'a, 'v: 'a, F>(&'a self, col: &F) -> Scalar<'a>
    where
        F: Fn(ColumnRef) -> &'v Value,
    {
        match self {
            Expr::Literal(v) => scalar_of(v),
            Expr::Column(c) => scalar_of(col(*c)),
            Expr::Arith(op, l, r) => {
                let (Scalar::Int(a), Scalar::Int(b)) = (l.scalar(col), r.scalar(col)) else {
                    return Scalar::Int(0);
                };
                Scalar::Int(match op {
                    ArithOp::Add => a.saturating_add(b),
                    ArithOp::Sub => a.saturating_sub(b),
                })
            }
            Expr::Bool(b) => Scalar::Int(*b as i64),
            _ => Scalar::Int(self.eval(col) as i64),
        }
    }

    /// Evaluates a boolean expression; `col` supplies column values.
    pub fn eval<'v, F>(&self, col: &F) -> bool
    where
        F: Fn(ColumnRef) -> &'v Value,
    {
        match self {
            Expr::Bool(b) => *b,
            Expr::Not(e) => !e.eval(col),
            Expr::And(l, r) => l.eval(col) && r.eval(col),
            Expr::Or(l, r) => l.eval(col) || r.eval(col),
            Expr::Cmp(op, l, r) => op.holds(l.scalar(col).cmp(&r.scalar(col))),
            Expr::Literal(_) | Expr::Column(_) | Expr::Arith(..) => false,
        }
    }
}

fn scalar_of(v: &Value) -> Scalar<'_> {
    match v {
        Value::Int(i) => Scalar::Int(*i as i64),
        Value::Char(s) => Scalar::Str(s),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Bool(b) => write!(f, "{}", if *b { "TRUE" } else { "FALSE" }),
            Expr::Literal(v) => write!(f, "{v}"),
            Expr::Column(c) => write!(f, "#{}.{}", c.rel, c.attr),
            Expr::Arith(op, l, r) => {
                let s = if *op == ArithOp::Add { "+" } else { "-" };
                write!(f, "({l} {s} {r})")
            }
            Expr::Cmp(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Not(e) => write!(f, "NOT {e}"),
            Expr::And(l, r) => write!(f, "({l} AND {r})"),
            Expr::Or(l, r) => write!(f, "({l} OR {r})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row<'a>(vals: &'a [Value]) -> impl Fn(ColumnRef) -> &'a Value + 'a {
        move |c| &vals[c.attr]
    }

    #[test]
    fn de_morgan_pushdown() {
        let e = Expr::not(Expr::and(
            Expr::cmp(CmpOp::Lt, Expr::col(0, 0), Expr::int(20)),
            Expr::cmp(CmpOp::Eq, Expr::col(0, 1), Expr::int(0)),
        ));
        let want = Expr::Or(
            Box::new(Expr::cmp(CmpOp::Ge, Expr::col(0, 0), Expr::int(20))),
            Box::new(Expr::cmp(CmpOp::Ne, Expr::col(0, 1), Expr::int(0))),
        );
        assert_eq!(e.push_not(), want);
    }

    #[test]
    fn eval_mixed() {
        let vals = [Value::Int(5), Value::Char("AB".into())];
        let r = row(&vals);
        let e = Expr::cmp(
            CmpOp::Lt,
            Expr::Arith(ArithOp::Add, Box::new(Expr::col(0, 0)), Box::new(Expr::int(1))),
            Expr::int(7),
        );
        assert!(e.eval(&r));
        let s = Expr::cmp(CmpOp::Eq, Expr::col(0, 1), Expr::Literal(Value::Char("AB  ".into())));
        assert!(s.eval(&r));
        assert!(!Expr::not(s).eval(&r));
    }

    #[test]
    fn conjuncts_flatten() {
        let a = Expr::cmp(CmpOp::Eq, Expr::col(0, 0), Expr::int(1));
        let b = Expr::cmp(CmpOp::Eq, Expr::col(1, 0), Expr::int(2));
        let c = Expr::cmp(CmpOp::Eq, Expr::col(2, 0), Expr::int(3));
        let e = Expr::And(
            Box::new(a.clone()),
            Box::new(Expr::And(Box::new(b.clone()), Box::new(c.clone()))),
        );
        assert_eq!(e.conjuncts(), vec![a, b, c]);
    }
}
