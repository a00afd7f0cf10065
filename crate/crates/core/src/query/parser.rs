//! Recursive-descent parser.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::SyntaxError;

pub fn parse(src: &str) -> Result<Statement, SyntaxError> {
    let mut p = Parser {
        toks: tokenize(src)?,
        at: 0,
    };
    let stmt = p.statement()?;
    p.eat(&Tok::Semi);
    if p.peek() != &Tok::Eof {
        return Err(p.error(&["end of statement"]));
    }
    Ok(stmt)
}

/// Splits a script into statements on `;` outside string literals.
/// Returns each statement with its byte offset; a trailing fragment without
/// `;` is returned as well unless it is blank.
pub fn split_statements(src: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut in_str = false;
    let mut in_comment = false;
    let b = src.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if in_comment {
            if c == b'\n' {
                in_comment = false;
            }
        } else if in_str {
            if c == b'\'' {
                in_str = false;
            }
        } else if c == b'\'' {
            in_str = true;
        } else if c == b'-' && b.get(i + 1) == Some(&b'-') {
            in_comment = true;
        } else if c == b';' {
            out.push((start, &src[start..=i]));
            start = i + 1;
        }
        i += 1;
    }
    if !is_blank(&src[start..]) {
        out.push((start, &src[start..]));
    }
    out.retain(|(_, s)| !is_blank(s.trim_end_matches(';')));
    out
}

/// True when the text holds nothing but whitespace and comments.
pub fn is_blank(s: &str) -> bool {
    s.lines()
        .all(|l| l.trim().is_empty() || l.trim_start().starts_with("--"))
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn pos(&self) -> usize {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        SyntaxError {
            position: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<usize, SyntaxError> {
        let pos = self.pos();
        if self.eat(&t) {
            Ok(pos)
        } else {
            Err(self.error(&[what]))
        }
    }

    fn keyword(&mut self, k: &'static str) -> Result<usize, SyntaxError> {
        self.expect(Tok::Keyword(k), k)
    }

    fn ident(&mut self) -> Result<(String, usize), SyntaxError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok((s, pos))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn statement(&mut self) -> Result<Statement, SyntaxError> {
        match self.peek() {
            Tok::Keyword("SELECT") => self.select(),
            Tok::Keyword("INSERT") => self.insert(),
            Tok::Keyword("DELETE") => self.delete(),
            Tok::Keyword("UPDATE") => self.update(),
            Tok::Keyword("CREATE") => self.create(),
            Tok::Keyword("DROP") => {
                self.bump();
                self.keyword("TABLE")?;
                let table = self.table_name()?;
                Ok(Statement::DropTable { table })
            }
            _ => Err(self.error(&["CREATE", "DELETE", "DROP", "INSERT", "SELECT", "UPDATE"])),
        }
    }

    fn table_name(&mut self) -> Result<TableRef, SyntaxError> {
        let (name, pos) = self.ident()?;
        Ok(TableRef { name, alias: None, pos })
    }

    fn table_ref(&mut self) -> Result<TableRef, SyntaxError> {
        let mut t = self.table_name()?;
        if self.eat(&Tok::Keyword("AS")) {
            t.alias = Some(self.ident()?.0);
        } else if let Tok::Ident(a) = self.peek().clone() {
            self.bump();
            t.alias = Some(a);
        }
        Ok(t)
    }

    fn column(&mut self) -> Result<ColumnName, SyntaxError> {
        let (first, pos) = self.ident()?;
        if self.eat(&Tok::Dot) {
            let (name, _) = self.ident()?;
            Ok(ColumnName {
                qualifier: Some(first),
                name,
                pos,
            })
        } else {
            Ok(ColumnName {
                qualifier: None,
                name: first,
                pos,
            })
        }
    }

    fn where_clause(&mut self) -> Result<Option<AstExpr>, SyntaxError> {
        if self.eat(&Tok::Keyword("WHERE")) {
            Ok(Some(self.expr()?))
        } else {
            Ok(None)
        }
    }

    fn select(&mut self) -> Result<Statement, SyntaxError> {
        self.keyword("SELECT")?;
        let columns = if self.eat(&Tok::Star) {
            None
        } else {
            let mut cols = vec![self.column().map_err(|_| self.error(&["'*'", "identifier"]))?];
            while self.eat(&Tok::Comma) {
                cols.push(self.column()?);
            }
            Some(cols)
        };
        self.keyword("FROM")?;
        let mut from = vec![self.table_ref()?];
        while self.eat(&Tok::Comma) {
            from.push(self.table_ref()?);
        }
        let filter = self.where_clause()?;
        let order_by = if self.eat(&Tok::Keyword("ORDER")) {
            self.keyword("BY")?;
            let column = self.column()?;
            let descending = if self.eat(&Tok::Keyword("DESC")) {
                true
            } else {
                self.eat(&Tok::Keyword("ASC"));
                false
            };
            Some(OrderBy { column, descending })
        } else {
            None
        };
        Ok(Statement::Select(Select {
            columns,
            from,
            filter,
            order_by,
        }))
    }

    fn literal(&mut self) -> Result<Literal, SyntaxError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(s) => {
                self.bump();
                Ok(Literal::Int(s, pos))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Literal::Str(s, pos))
            }
            Tok::Minus => {
                self.bump();
                match self.peek().clone() {
                    Tok::Int(s) => {
                        self.bump();
                        Ok(Literal::Int(format!("-{s}"), pos))
                    }
                    _ => Err(self.error(&["integer"])),
                }
            }
            _ => Err(self.error(&["integer", "string"])),
        }
    }

    fn insert(&mut self) -> Result<Statement, SyntaxError> {
        self.keyword("INSERT")?;
        self.keyword("INTO")?;
        let table = self.table_name()?;
        self.keyword("VALUES")?;
        self.expect(Tok::LParen, "'('")?;
        let mut values = vec![self.literal()?];
        loop {
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                    values.push(self.literal()?);
                }
                Tok::RParen => {
                    self.bump();
                    break;
                }
                _ => return Err(self.error(&["')'", "','"])),
            }
        }
        Ok(Statement::Insert { table, values })
    }

    fn delete(&mut self) -> Result<Statement, SyntaxError> {
        self.keyword("DELETE")?;
        self.keyword("FROM")?;
        let table = self.table_name()?;
        let filter = self.where_clause()?;
        Ok(Statement::Delete { table, filter })
    }

    fn update(&mut self) -> Result<Statement, SyntaxError> {
        self.keyword("UPDATE")?;
        let table = self.table_name()?;
        self.keyword("SET")?;
        let mut sets = Vec::new();
        loop {
            let c = self.column()?;
            self.expect(Tok::Eq, "'='")?;
            sets.push((c, self.literal()?));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        let filter = self.where_clause()?;
        Ok(Statement::Update { table, sets, filter })
    }

    fn create(&mut self) -> Result<Statement, SyntaxError> {
        self.keyword("CREATE")?;
        self.keyword("TABLE")?;
        let table = self.table_name()?;
        self.expect(Tok::LParen, "'('")?;
        let mut columns = Vec::new();
        loop {
            let (name, pos) = self.ident()?;
            let ty = match self.peek() {
                Tok::Keyword("INTEGER") => {
                    self.bump();
                    TypeName::Integer
                }
                Tok::Keyword("CHAR") => {
                    self.bump();
                    self.expect(Tok::LParen, "'('")?;
                    let wpos = self.pos();
                    let w = match self.peek().clone() {
                        Tok::Int(s) => {
                            self.bump();
                            s
                        }
                        _ => return Err(self.error(&["integer"])),
                    };
                    self.expect(Tok::RParen, "')'")?;
                    TypeName::Char(w, wpos)
                }
                _ => return Err(self.error(&["CHAR", "INTEGER"])),
            };
            columns.push(ColumnDef { name, ty, pos });
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    break;
                }
                _ => return Err(self.error(&["')'", "','"])),
            }
        }
        let grid = if self.eat(&Tok::Keyword("GRID")) {
            self.expect(Tok::LParen, "'('")?;
            let mut g = vec![self.column()?];
            while self.eat(&Tok::Comma) {
                g.push(self.column()?);
            }
            self.expect(Tok::RParen, "')'")?;
            Some(g)
        } else {
            None
        };
        Ok(Statement::CreateTable { table, columns, grid })
    }

    fn expr(&mut self) -> Result<AstExpr, SyntaxError> {
        let mut left = self.and_expr()?;
        while self.peek() == &Tok::Keyword("OR") {
            let pos = self.bump().pos;
            let right = self.and_expr()?;
            left = AstExpr::Binary {
                op: BinOp::Or,
                left: Box::new(left),
                right: Box::new(right),
                pos,
            };
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<AstExpr, SyntaxError> {
        let mut left = self.not_expr()?;
        while self.peek() == &Tok::Keyword("AND") {
            let pos = self.bump().pos;
            let right = self.not_expr()?;
            left = AstExpr::Binary {
                op: BinOp::And,
                left: Box::new(left),
                right: Box::new(right),
                pos,
            };
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<AstExpr, SyntaxError> {
        if self.peek() == &Tok::Keyword("NOT") {
            let pos = self.bump().pos;
            return Ok(AstExpr::Not(Box::new(self.not_expr()?), pos));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<AstExpr, SyntaxError> {
        let left = self.arith()?;
        let op = match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(left),
        };
        let pos = self.bump().pos;
        let right = self.arith()?;
        Ok(AstExpr::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
            pos,
        })
    }

    fn arith(&mut self) -> Result<AstExpr, SyntaxError> {
        let mut left = self.primary()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(left),
            };
            let pos = self.bump().pos;
            let right = self.primary()?;
            left = AstExpr::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
                pos,
            };
        }
    }

    fn primary(&mut self) -> Result<AstExpr, SyntaxError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(_) => Ok(AstExpr::Column(self.column()?)),
            Tok::Int(s) => {
                self.bump();
                Ok(AstExpr::Int(s, pos))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(AstExpr::Str(s, pos))
            }
            Tok::Minus => {
                self.bump();
                match self.peek().clone() {
                    Tok::Int(s) => {
                        self.bump();
                        Ok(AstExpr::Int(format!("-{s}"), pos))
                    }
                    _ => Err(self.error(&["integer"])),
                }
            }
            _ => Err(self.error(&["'('", "'-'", "identifier", "integer", "string"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sexpr(s: &str) -> String {
        parse(s).unwrap().to_string()
    }

    #[test]
    fn precedence() {
        assert_eq!(
            sexpr("select * from r where a = 1 or b = 2 and not c < d + 1 - e"),
            "(select (cols *) (from R) (where (or (= A 1) (and (= B 2) (not (< C (- (+ D 1) E)))))))"
        );
    }

    #[test]
    fn statements() {
        assert_eq!(
            sexpr("insert into t values (-3, 'x''y');"),
            "(insert T (values -3 'x''y'))"
        );
        assert_eq!(
            sexpr("create table t (a integer, b char(10)) grid (a, b)"),
            "(create T (columns (A integer) (B char 10)) (grid A B))"
        );
        assert_eq!(
            sexpr("update t set a = 1, b = 'z' where a > 0"),
            "(update T (set (A 1) (B 'z')) (where (> A 0)))"
        );
        assert_eq!(sexpr("DROP TABLE t"), "(drop T)");
        assert_eq!(
            sexpr("select r.a, s.b from t r, u as s order by a desc"),
            "(select (cols R.A S.B) (from (T as R) (U as S)) (order A desc))"
        );
    }

    #[test]
    fn errors_carry_position() {
        let e = parse("select from t").unwrap_err();
        assert_eq!(e.position, 7);
        assert_eq!(e.found, "FROM");
        let e = parse("select * from t where").unwrap_err();
        assert_eq!(e.position, 21);
        assert_eq!(e.found, "end of input");
        let e = parse("select * from t;;").unwrap_err();
        assert_eq!(e.position, 16);
    }

    #[test]
    fn splitting() {
        let parts = split_statements("select 1; insert into t values (';');\n-- done\n");
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[1].0, 9);
        assert!(parts[1].1.contains("';'"));
    }
}
