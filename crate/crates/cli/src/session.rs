//! Statement and dot-command handling shared by the REPL and scripts.

use std::io::{self, Write};

use gridrel::query::catalog::is_catalog;
use gridrel::query::parser::{is_blank, split_statements};
use gridrel::query::render::{render, Format};
use gridrel::{Database, Error, QueryResult, Value};

/// What a failed input line did to the session.
#[derive(Debug)]
pub enum Failure {
    /// The statement or command was rejected; the session can go on.
    Statement(String),
    /// The database or the output became unusable.
    Io(String),
}

pub enum Step {
    Continue,
    Quit,
}

pub struct Session<W: Write> {
    db: Database,
    format: Format,
    out: W,
    /// Text of a statement not yet terminated by `;`.
    pending: String,
}

fn classify(e: Error) -> Failure {
    match e {
        Error::Io(_) => Failure::Io(e.to_string()),
        other => Failure::Statement(other.to_string()),
    }
}

fn out_err(e: io::Error) -> Failure {
    Failure::Io(format!("cannot write output: {e}"))
}

impl<W: Write> Session<W> {
    pub fn new(db: Database, format: Format, out: W) -> Self {
        Session {
            db,
            format,
            out,
            pending: String::new(),
        }
    }

    pub fn has_pending(&self) -> bool {
        !is_blank(&self.pending)
    }

    /// Feeds one input line. Complete statements run in order; the first
    /// failure stops the line and is returned.
    pub fn feed_line(&mut self, line: &str) -> Result<Step, Failure> {
        if !self.has_pending() && line.trim_start().starts_with('.') {
            self.pending.clear();
            return self.dot(line.trim());
        }
        self.pending.push_str(line);
        self.pending.push('\n');
        let text = std::mem::take(&mut self.pending);
        let pieces = split_statements(&text);
        let mut done = 0;
        for (off, stmt) in &pieces {
            if !stmt.ends_with(';') {
                break;
            }
            done = off + stmt.len();
            if let Err(f) = self.statement(stmt) {
                self.pending = text[done..].to_string();
                return Err(f);
            }
        }
        self.pending = text[done..].to_string();
        Ok(Step::Continue)
    }

    /// Runs whatever is left without a terminating `;`.
    pub fn finish(&mut self) -> Result<(), Failure> {
        let text = std::mem::take(&mut self.pending);
        if is_blank(&text) {
            return Ok(());
        }
        self.statement(&text)
    }

    fn statement(&mut self, sql: &str) -> Result<(), Failure> {
        let sql = sql.trim().trim_end_matches(';');
        let res = self.db.execute(sql).map_err(classify)?;
        let text = match res {
            QueryResult::Rows { columns, rows } => render(&columns, &rows, self.format),
            QueryResult::Count { verb, count } => {
                format!("{verb} {count} tuple{}\n", if count == 1 { "" } else { "s" })
            }
            QueryResult::Done(msg) => format!("{msg}\n"),
        };
        self.out.write_all(text.as_bytes()).map_err(out_err)
    }

    fn dot(&mut self, line: &str) -> Result<Step, Failure> {
        let (cmd, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let text = match cmd {
            ".quit" | ".exit" => return Ok(Step::Quit),
            ".stats" => self.stats(),
            ".access" => {
                let s = self.db.access_stats();
                format!(
                    "page reads: {} (directory {}, data {}, scales {})\npage writes: {} (directory {}, data {}, scales {})\n",
                    s.reads(),
                    s.dir_reads,
                    s.data_reads,
                    s.scale_reads,
                    s.writes(),
                    s.dir_writes,
                    s.data_writes,
                    s.scale_writes
                )
            }
            ".reset" => {
                self.db.reset_access_stats();
                String::new()
            }
            ".explain" => {
                if rest.is_empty() {
                    return Err(Failure::Statement(".explain needs a query".into()));
                }
                let q = rest.trim_end_matches(';');
                self.db.explain(q).map_err(classify)?
            }
            ".help" => concat!(
                ".stats            grid statistics of every relation\n",
                ".access           page accesses since the last .reset\n",
                ".reset            zero the access counters\n",
                ".explain <query>  show the plan of a SELECT\n",
                ".quit             leave\n",
            )
            .to_string(),
            other => return Err(Failure::Statement(format!("unknown command {other} (try .help)"))),
        };
        self.out.write_all(text.as_bytes()).map_err(out_err)?;
        Ok(Step::Continue)
    }

    fn stats(&mut self) -> String {
        let headers: Vec<String> = [
            "relation",
            "tuples",
            "buckets",
            "occupancy %",
            "redundancy",
            "partitions",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let names: Vec<String> = self
            .db
            .catalog()
            .names()
            .filter(|n| !is_catalog(n))
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for name in names {
            let Some(s) = self.db.grid_stats(&name) else { continue };
            let schema = self.db.catalog().get(&name).expect("listed relation");
            let parts: Vec<String> = schema
                .grid
                .iter()
                .zip(&s.partitions)
                .map(|(&a, p)| format!("{}={p}", schema.attributes[a].name))
                .collect();
            rows.push(vec![
                Value::Char(name),
                Value::Int(i32::try_from(s.tuples).unwrap_or(i32::MAX)),
                Value::Int(i32::try_from(s.buckets).unwrap_or(i32::MAX)),
                Value::Char(format!("{:.1}", s.occupancy * 100.0)),
                Value::Char(format!("{:.2}", s.redundancy)),
                Value::Char(parts.join(" ")),
            ]);
        }
        render(&headers, &rows, self.format)
    }

    pub fn flush(&mut self) -> Result<(), Failure> {
        self.out.flush().map_err(out_err)?;
        self.db.flush().map_err(classify)
    }
}
