//! Parsed statements before name resolution.

use std::fmt;

/// A possibly qualified column name; `pos` is its byte offset in the text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnName {
    pub qualifier: Option<String>,
    pub name: String,
    pub pos: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    And,
    Or,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
        }
    }
}

/// Binary expression tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AstExpr {
    Binary {
        op: BinOp,
        left: Box<AstExpr>,
        right: Box<AstExpr>,
        pos: usize,
    },
    Not(Box<AstExpr>, usize),
    Column(ColumnName),
    /// Decimal digits with an optional leading minus, range-checked later.
    Int(String, usize),
    Str(String, usize),
}

impl AstExpr {
    pub fn pos(&self) -> usize {
        match self {
            AstExpr::Binary { pos, .. } | AstExpr::Not(_, pos) | AstExpr::Int(_, pos) | AstExpr::Str(_, pos) => *pos,
            AstExpr::Column(c) => c.pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Int(String, usize),
    Str(String, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRef {
    pub name: String,
    pub alias: Option<String>,
    pub pos: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeName {
    Integer,
    Char(String, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnDef {
    pub name: String,
    pub ty: TypeName,
    pub pos: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderBy {
    pub column: ColumnName,
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Select {
    /// `None` for `*`.
    pub columns: Option<Vec<ColumnName>>,
    pub from: Vec<TableRef>,
    pub filter: Option<AstExpr>,
    pub order_by: Option<OrderBy>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Select(Select),
    Insert {
        table: TableRef,
        values: Vec<Literal>,
    },
    Delete {
        table: TableRef,
        filter: Option<AstExpr>,
    },
    Update {
        table: TableRef,
        sets: Vec<(ColumnName, Literal)>,
        filter: Option<AstExpr>,
    },
    CreateTable {
        table: TableRef,
        columns: Vec<ColumnDef>,
        grid: Option<Vec<ColumnName>>,
    },
    DropTable {
        table: TableRef,
    },
}

// S-expression rendering, used by the golden tests.

impl fmt::Display for ColumnName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.qualifier {
            Some(q) => write!(f, "{q}.{}", self.name),
            None => write!(f, "{}", self.name),
        }
    }
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

impl fmt::Display for AstExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AstExpr::Binary { op, left, right, .. } => write!(f, "({} {left} {right})", op.symbol()),
            AstExpr::Not(e, _) => write!(f, "(not {e})"),
            AstExpr::Column(c) => write!(f, "{c}"),
            AstExpr::Int(s, _) => write!(f, "{s}"),
            AstExpr::Str(s, _) => write!(f, "{}", quote(s)),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(s, _) => write!(f, "{s}"),
            Literal::Str(s, _) => write!(f, "{}", quote(s)),
        }
    }
}

impl fmt::Display for TableRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.alias {
            Some(a) => write!(f, "({} as {a})", self.name),
            None => write!(f, "{}", self.name),
        }
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Select(s) => {
                write!(f, "(select ")?;
                match &s.columns {
                    None => write!(f, "(cols *)")?,
                    Some(c) => write!(f, "(cols {})", join(c))?,
                }
                write!(f, " (from {})", join(&s.from))?;
                if let Some(w) = &s.filter {
                    write!(f, " (where {w})")?;
                }
                if let Some(o) = &s.order_by {
                    let dir = if o.descending { "desc" } else { "asc" };
                    write!(f, " (order {} {dir})", o.column)?;
                }
                write!(f, ")")
            }
            Statement::Insert { table, values } => {
                write!(f, "(insert {table} (values {}))", join(values))
            }
            Statement::Delete { table, filter } => {
                write!(f, "(delete {table}")?;
                if let Some(w) = filter {
                    write!(f, " (where {w})")?;
                }
                write!(f, ")")
            }
            Statement::Update { table, sets, filter } => {
                write!(f, "(update {table} (set")?;
                for (c, v) in sets {
                    write!(f, " ({c} {v})")?;
                }
                write!(f, ")")?;
                if let Some(w) = filter {
                    write!(f, " (where {w})")?;
                }
                write!(f, ")")
            }
            Statement::CreateTable { table, columns, grid } => {
                write!(f, "(create {table} (columns")?;
                for c in columns {
                    match &c.ty {
                        TypeName::Integer => write!(f, " ({} integer)", c.name)?,
                        TypeName::Char(n, _) => write!(f, " ({} char {n})", c.name)?,
                    }
                }
                write!(f, ")")?;
                if let Some(g) = grid {
                    write!(f, " (grid {})", join(g))?;
                }
                write!(f, ")")
            }
            Statement::DropTable { table } => write!(f, "(drop {table})"),
        }
    }
}
