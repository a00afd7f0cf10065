//! Name resolution and type checking.

use super::ast::{self, AstExpr, BinOp, ColumnName, Literal, Statement, TypeName};
use super::catalog::{self, Catalog, NAME_LEN};
use crate::error::{Error, Result};
use crate::expr::{ArithOp, CmpOp, ColumnRef, Expr};
use crate::value::{Attribute, DataType, RelationSchema, Tuple, Value};

/// A relation in a FROM list.
#[derive(Debug, Clone)]
pub struct BoundTable {
    /// Alias if given, else the relation name.
    pub label: String,
    pub schema: RelationSchema,
}

#[derive(Debug, Clone)]
pub struct BoundSelect {
    pub tables: Vec<BoundTable>,
    pub projection: Vec<ColumnRef>,
    pub headers: Vec<String>,
    pub filter: Expr,
    pub order_by: Option<(ColumnRef, bool)>,
}

/// A resolved statement. Single-relation filters use relation index 0.
#[derive(Debug, Clone)]
pub enum Bound {
    Select(BoundSelect),
    Insert {
        rel: String,
        tuple: Tuple,
    },
    Delete {
        rel: String,
        filter: Expr,
    },
    Update {
        rel: String,
        sets: Vec<(usize, Value)>,
        filter: Expr,
    },
    Create(RelationSchema),
    Drop(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Int,
    Char,
    Bool,
}

pub fn analyze(stmt: &Statement, cat: &Catalog) -> Result<Bound> {
    match stmt {
        Statement::Select(s) => select(s, cat).map(Bound::Select),
        Statement::Insert { table, values } => {
            let schema = lookup(cat, &table.name)?;
            if values.len() != schema.attributes.len() {
                return Err(Error::InvalidTuple(format!(
                    "{} has {} attributes, got {} values",
                    schema.name,
                    schema.attributes.len(),
                    values.len()
                )));
            }
            let vals = values
                .iter()
                .zip(&schema.attributes)
                .map(|(l, a)| stored_value(l, a))
                .collect::<Result<Vec<_>>>()?;
            Ok(Bound::Insert {
                rel: schema.name.clone(),
                tuple: Tuple(vals),
            })
        }
        Statement::Delete { table, filter } => {
            let schema = lookup(cat, &table.name)?;
            let scope = single_scope(table, schema);
            Ok(Bound::Delete {
                rel: schema.name.clone(),
                filter: where_expr(filter, &scope)?,
            })
        }
        Statement::Update { table, sets, filter } => {
            let schema = lookup(cat, &table.name)?;
            let scope = single_scope(table, schema);
            let mut out: Vec<(usize, Value)> = Vec::new();
            for (c, l) in sets {
                let r = scope.resolve(c)?;
                if out.iter().any(|(a, _)| *a == r.attr) {
                    return Err(Error::InvalidTuple(format!("{c} is assigned twice")));
                }
                out.push((r.attr, stored_value(l, &schema.attributes[r.attr])?));
            }
            Ok(Bound::Update {
                rel: schema.name.clone(),
                sets: out,
                filter: where_expr(filter, &scope)?,
            })
        }
        Statement::CreateTable { table, columns, grid } => create(table, columns, grid.as_deref(), cat),
        Statement::DropTable { table } => {
            let schema = lookup(cat, &table.name)?;
            if catalog::is_catalog(&schema.name) {
                return Err(Error::CatalogRelation(schema.name.clone()));
            }
            Ok(Bound::Drop(schema.name.clone()))
        }
    }
}

fn lookup<'c>(cat: &'c Catalog, name: &str) -> Result<&'c RelationSchema> {
    cat.get(name).ok_or_else(|| Error::UnknownRelation(name.to_string()))
}

fn single_scope<'a>(t: &ast::TableRef, schema: &'a RelationSchema) -> Scope<'a> {
    Scope {
        tables: vec![(t.alias.clone().unwrap_or_else(|| schema.name.clone()), schema)],
    }
}

fn where_expr(filter: &Option<AstExpr>, scope: &Scope) -> Result<Expr> {
    match filter {
        None => Ok(Expr::Bool(true)),
        Some(e) => {
            let (e, ty) = scope.expr(e)?;
            if ty != Ty::Bool {
                return Err(Error::TypeMismatch("WHERE clause is not a condition".into()));
            }
            Ok(e)
        }
    }
}

fn int_literal(s: &str) -> Result<i32> {
    s.parse::<i32>()
        .map_err(|_| Error::ConstantOutOfDomain(format!("{s} is outside the INTEGER range")))
}

fn stored_value(l: &Literal, a: &Attribute) -> Result<Value> {
    match (l, a.ty) {
        (Literal::Int(s, _), DataType::Integer) => Ok(Value::Int(int_literal(s)?)),
        (Literal::Str(s, _), DataType::Char(n)) => {
            let s = s.trim_end_matches(' ');
            if s.len() > n as usize {
                return Err(Error::ConstantOutOfDomain(format!(
                    "'{s}' does not fit {} CHAR({n})",
                    a.name
                )));
            }
            Ok(Value::Char(s.to_string()))
        }
        (l, t) => Err(Error::TypeMismatch(format!("{l} is not a {t} value for {}", a.name))),
    }
}

struct Scope<'a> {
    tables: Vec<(String, &'a RelationSchema)>,
}

impl Scope<'_> {
    fn resolve(&self, c: &ColumnName) -> Result<ColumnRef> {
        let mut found = None;
        for (rel, (label, schema)) in self.tables.iter().enumerate() {
            if let Some(q) = &c.qualifier {
                if q != label {
                    continue;
                }
            }
            if let Some(attr) = schema.attr_index(&c.name) {
                if found.is_some() {
                    return Err(Error::AmbiguousColumn(c.to_string()));
                }
                found = Some(ColumnRef { rel, attr });
            }
        }
        if let (Some(q), None) = (&c.qualifier, &found) {
            if !self.tables.iter().any(|(l, _)| l == q) {
                return Err(Error::UnknownRelation(q.clone()));
            }
        }
        found.ok_or_else(|| Error::UnknownColumn(c.to_string()))
    }

    fn ty_of(&self, c: ColumnRef) -> DataType {
        self.tables[c.rel].1.attributes[c.attr].ty
    }

    fn expr(&self, e: &AstExpr) -> Result<(Expr, Ty)> {
        match e {
            AstExpr::Column(c) => {
                let r = self.resolve(c)?;
                let ty = match self.ty_of(r) {
                    DataType::Integer => Ty::Int,
                    DataType::Char(_) => Ty::Char,
                };
                Ok((Expr::Column(r), ty))
            }
            AstExpr::Int(s, _) => Ok((Expr::Literal(Value::Int(int_literal(s)?)), Ty::Int)),
            AstExpr::Str(s, _) => Ok((
                Expr::Literal(Value::Char(s.trim_end_matches(' ').to_string())),
                Ty::Char,
            )),
            AstExpr::Not(inner, _) => {
                let (x, ty) = self.expr(inner)?;
                if ty != Ty::Bool {
                    return Err(Error::TypeMismatch(format!("NOT applied to {inner}")));
                }
                Ok((Expr::not(x), Ty::Bool))
            }
            AstExpr::Binary { op, left, right, .. } => {
                let (l, lt) = self.expr(left)?;
                let (r, rt) = self.expr(right)?;
                match op {
                    BinOp::And | BinOp::Or => {
                        if lt != Ty::Bool || rt != Ty::Bool {
                            return Err(Error::TypeMismatch(format!("{} needs conditions in {e}", op.symbol())));
                        }
                        let x = if *op == BinOp::And {
                            Expr::And(Box::new(l), Box::new(r))
                        } else {
                            Expr::Or(Box::new(l), Box::new(r))
                        };
                        Ok((x, Ty::Bool))
                    }
                    BinOp::Add | BinOp::Sub => {
                        if lt != Ty::Int || rt != Ty::Int {
                            return Err(Error::TypeMismatch(format!("arithmetic on non-integers in {e}")));
                        }
                        let a = if *op == BinOp::Add { ArithOp::Add } else { ArithOp::Sub };
                        Ok((Expr::Arith(a, Box::new(l), Box::new(r)), Ty::Int))
                    }
                    _ => {
                        if lt != rt || lt == Ty::Bool {
                            return Err(Error::TypeMismatch(format!("cannot compare in {e}")));
                        }
                        self.check_char_width(&l, &r)?;
                        self.check_char_width(&r, &l)?;
                        let c = match op {
                            BinOp::Eq => CmpOp::Eq,
                            BinOp::Ne => CmpOp::Ne,
                            BinOp::Lt => CmpOp::Lt,
                            BinOp::Le => CmpOp::Le,
                            BinOp::Gt => CmpOp::Gt,
                            _ => CmpOp::Ge,
                        };
                        Ok((Expr::cmp(c, l, r), Ty::Bool))
                    }
                }
            }
        }
    }

    /// A string constant compared with a CHAR(n) column must fit n bytes.
    fn check_char_width(&self, col: &Expr, lit: &Expr) -> Result<()> {
        if let (Expr::Column(c), Expr::Literal(Value::Char(s))) = (col, lit) {
            if let DataType::Char(n) = self.ty_of(*c) {
                if s.len() > n as usize {
                    return Err(Error::ConstantOutOfDomain(format!("'{s}' is longer than CHAR({n})")));
                }
            }
        }
        Ok(())
    }
}

fn select(s: &ast::Select, cat: &Catalog) -> Result<BoundSelect> {
    let mut tables = Vec::new();
    for t in &s.from {
        let schema = lookup(cat, &t.name)?;
        let label = t.alias.clone().unwrap_or_else(|| schema.name.clone());
        if tables.iter().any(|b: &BoundTable| b.label == label) {
            return Err(Error::DuplicateRelation(label));
        }
        tables.push(BoundTable {
            label,
            schema: schema.clone(),
        });
    }
    let scope = Scope {
        tables: tables.iter().map(|t| (t.label.clone(), &t.schema)).collect(),
    };
    let multi = tables.len() > 1;
    let header = |c: ColumnRef| {
        let t = &tables[c.rel];
        let a = &t.schema.attributes[c.attr].name;
        if multi {
            format!("{}.{a}", t.label)
        } else {
            a.clone()
        }
    };
    let projection: Vec<ColumnRef> = match &s.columns {
        None => tables
            .iter()
            .enumerate()
            .flat_map(|(rel, t)| (0..t.schema.attributes.len()).map(move |attr| ColumnRef { rel, attr }))
            .collect(),
        Some(cols) => cols.iter().map(|c| scope.resolve(c)).collect::<Result<_>>()?,
    };
    let headers = projection.iter().map(|&c| header(c)).collect();
    let filter = where_expr(&s.filter, &scope)?;
    let order_by = match &s.order_by {
        None => None,
        Some(o) => Some((scope.resolve(&o.column)?, o.descending)),
    };
    Ok(BoundSelect {
        tables,
        projection,
        headers,
        filter,
        order_by,
    })
}

fn check_name(name: &str) -> Result<()> {
    if name.len() > NAME_LEN {
        return Err(Error::InvalidSchema(format!(
            "name {name} is longer than {NAME_LEN} bytes"
        )));
    }
    Ok(())
}

fn create(
    table: &ast::TableRef,
    columns: &[ast::ColumnDef],
    grid: Option<&[ColumnName]>,
    cat: &Catalog,
) -> Result<Bound> {
    check_name(&table.name)?;
    if cat.get(&table.name).is_some() {
        return Err(Error::DuplicateRelation(table.name.clone()));
    }
    let mut attrs = Vec::new();
    for c in columns {
        check_name(&c.name)?;
        let ty = match &c.ty {
            TypeName::Integer => DataType::Integer,
            TypeName::Char(w, _) => match w.parse::<u16>() {
                Ok(n) if n > 0 => DataType::Char(n),
                _ => return Err(Error::InvalidSchema(format!("bad width CHAR({w}) for {}", c.name))),
            },
        };
        attrs.push(Attribute::new(&c.name, ty));
    }
    let page_size = cat.page_size();
    let mut schema = RelationSchema::new(&table.name, attrs, page_size);
    if let Some(g) = grid {
        let mut dims = Vec::new();
        for c in g {
            if c.qualifier.as_ref().is_some_and(|q| *q != schema.name) {
                return Err(Error::UnknownRelation(c.qualifier.clone().unwrap()));
            }
            let i = schema
                .attr_index(&c.name)
                .ok_or_else(|| Error::UnknownColumn(c.to_string()))?;
            dims.push(i);
        }
        schema = schema.with_grid(dims);
    }
    schema.validate(page_size)?;
    Ok(Bound::Create(schema))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parser::parse;

    fn cat() -> Catalog {
        let mut c = Catalog::bootstrap(512);
        c.insert(RelationSchema::new(
            "T",
            vec![
                Attribute::new("A", DataType::Integer),
                Attribute::new("S", DataType::Char(4)),
            ],
            512,
        ));
        c.insert(RelationSchema::new(
            "U",
            vec![Attribute::new("A", DataType::Integer)],
            512,
        ));
        c
    }

    fn run(sql: &str) -> Result<Bound> {
        analyze(&parse(sql).unwrap(), &cat())
    }

    #[test]
    fn resolution_errors() {
        assert!(matches!(run("select * from nope"), Err(Error::UnknownRelation(_))));
        assert!(matches!(run("select b from t"), Err(Error::UnknownColumn(_))));
        assert!(matches!(run("select a from t, u"), Err(Error::AmbiguousColumn(_))));
        assert!(matches!(run("select x.a from t"), Err(Error::UnknownRelation(_))));
        assert!(matches!(run("select * from t, t"), Err(Error::DuplicateRelation(_))));
        assert!(run("select t.a, u.a from t, u where t.a = u.a").is_ok());
        assert!(run("select x.a from t x, t y where x.a < y.a").is_ok());
    }

    #[test]
    fn type_errors() {
        assert!(matches!(
            run("select * from t where a = 'x'"),
            Err(Error::TypeMismatch(_))
        ));
        assert!(matches!(
            run("select * from t where s + 1 = 2"),
            Err(Error::TypeMismatch(_))
        ));
        assert!(matches!(run("select * from t where a"), Err(Error::TypeMismatch(_))));
        assert!(matches!(
            run("select * from t where s = 'toolong'"),
            Err(Error::ConstantOutOfDomain(_))
        ));
        assert!(matches!(
            run("select * from t where a = 3000000000"),
            Err(Error::ConstantOutOfDomain(_))
        ));
        assert!(matches!(
            run("insert into t values ('x', 'y')"),
            Err(Error::TypeMismatch(_))
        ));
        assert!(matches!(
            run("insert into t values (1, 'abcde')"),
            Err(Error::ConstantOutOfDomain(_))
        ));
        assert!(matches!(run("insert into t values (1)"), Err(Error::InvalidTuple(_))));
        assert!(matches!(run("drop table relcat"), Err(Error::CatalogRelation(_))));
    }

    #[test]
    fn bound_shapes() {
        let Bound::Insert { tuple, .. } = run("insert into t values (-2147483648, 'ab  ')").unwrap() else {
            panic!()
        };
        assert_eq!(tuple.0, vec![Value::Int(i32::MIN), Value::Char("ab".into())]);
        let Bound::Create(s) = run("create table v (x integer, y char(3)) grid (y)").unwrap() else {
            panic!()
        };
        assert_eq!(s.grid, vec![1]);
        assert!(matches!(
            run("create table t (x integer)"),
            Err(Error::DuplicateRelation(_))
        ));
        let Bound::Select(s) = run("select * from t x, u where u.a > 1 order by s desc").unwrap() else {
            panic!()
        };
        assert_eq!(s.headers, vec!["X.A", "X.S", "U.A"]);
        assert_eq!(s.order_by, Some((ColumnRef { rel: 0, attr: 1 }, true)));
    }
}
