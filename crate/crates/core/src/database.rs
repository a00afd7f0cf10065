//! A directory of grid-file relations described by the catalog.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::expr::{CmpOp, Expr};
use crate::gridfile::{GridFile, GridStats, SplitPolicy};
use crate::query::analyze::{analyze, Bound, BoundSelect};
use crate::query::catalog::{self, Catalog, ATTRCAT, RELCAT};
use crate::query::exec::run_select;
use crate::query::parse;
use crate::query::plan::{explain, plan_select, ExecOptions, Plan, Relations};
use crate::storage::{AccessStats, PagerOptions, DEFAULT_PAGE_SIZE, MAX_PAGE_SIZE};
use crate::value::{Tuple, Value};

const META_FILE: &str = "DATABASE";
const META_TAG: &str = "gridrel database";

/// Smallest page that holds two catalog tuples.
pub const MIN_DB_PAGE_SIZE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DbOptions {
    pub page_size: usize,
    pub policy: SplitPolicy,
    pub cache_pages: usize,
}

impl Default for DbOptions {
    fn default() -> Self {
        DbOptions {
            page_size: DEFAULT_PAGE_SIZE,
            policy: SplitPolicy::default(),
            cache_pages: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryResult {
    Rows {
        columns: Vec<String>,
        rows: Vec<Vec<Value>>,
    },
    /// Tuples affected by INSERT, DELETE or UPDATE.
    Count {
        verb: &'static str,
        count: u64,
    },
    Done(String),
}

#[derive(Debug)]
pub struct Database {
    dir: PathBuf,
    opts: PagerOptions,
    policy: SplitPolicy,
    catalog: Catalog,
    files: Relations,
}

fn write_meta(dir: &Path, o: &DbOptions) -> Result<()> {
    let text = format!("{META_TAG}\npage_size = {}\npolicy = {}\n", o.page_size, o.policy);
    fs::write(dir.join(META_FILE), text)?;
    Ok(())
}

fn read_meta(dir: &Path) -> Result<(usize, SplitPolicy)> {
    let path = dir.join(META_FILE);
    let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.clone()),
        _ => Error::Io(e),
    })?;
    let bad = |m: &str| Error::CorruptHeader(format!("{}: {m}", path.display()));
    let mut lines = text.lines();
    if lines.next() != Some(META_TAG) {
        return Err(bad("not a database"));
    }
    let (mut page_size, mut policy) = (None, None);
    for l in lines {
        let Some((k, v)) = l.split_once('=') else { continue };
        match k.trim() {
            "page_size" => page_size = v.trim().parse::<usize>().ok(),
            "policy" => policy = v.trim().parse::<SplitPolicy>().ok(),
            _ => {}
        }
    }
    match (page_size, policy) {
        (Some(p), Some(s)) => Ok((p, s)),
        _ => Err(bad("missing page_size or policy")),
    }
}

impl Database {
    pub fn create(dir: &Path, o: DbOptions) -> Result<Database> {
        if !(MIN_DB_PAGE_SIZE..=MAX_PAGE_SIZE).contains(&o.page_size) {
            return Err(Error::InvalidSchema(format!(
                "page size {} outside {MIN_DB_PAGE_SIZE}..={MAX_PAGE_SIZE}",
                o.page_size
            )));
        }
        if dir.join(META_FILE).exists() {
            return Err(Error::Exists(dir.join(META_FILE)));
        }
        fs::create_dir_all(dir)?;
        let opts = PagerOptions {
            page_size: o.page_size,
            cache_pages: o.cache_pages,
        };
        let mut files = Relations::new();
        let relcat = catalog::relcat_schema(o.page_size);
        let attrcat = catalog::attrcat_schema(o.page_size);
        files.insert(RELCAT.into(), GridFile::create(dir, relcat.clone(), o.policy, opts)?);
        files.insert(ATTRCAT.into(), GridFile::create(dir, attrcat.clone(), o.policy, opts)?);
        let mut db = Database {
            dir: dir.to_path_buf(),
            opts,
            policy: o.policy,
            catalog: Catalog::bootstrap(o.page_size),
            files,
        };
        db.record(&relcat)?;
        db.record(&attrcat)?;
        write_meta(dir, &o)?;
        db.flush()?;
        Ok(db)
    }

    pub fn open(dir: &Path, cache_pages: usize) -> Result<Database> {
        let (page_size, policy) = read_meta(dir)?;
        let opts = PagerOptions { page_size, cache_pages };
        let mut rc = GridFile::open(dir, catalog::relcat_schema(page_size), opts)?;
        let mut ac = GridFile::open(dir, catalog::attrcat_schema(page_size), opts)?;
        let catalog = Catalog::from_rows(page_size, &rc.scan_all()?, &ac.scan_all()?)?;
        rc.reset_access_stats();
        ac.reset_access_stats();
        let mut files = Relations::new();
        files.insert(RELCAT.into(), rc);
        files.insert(ATTRCAT.into(), ac);
        for s in catalog.schemas() {
            if !catalog::is_catalog(&s.name) {
                files.insert(s.name.clone(), GridFile::open(dir, s.clone(), opts)?);
            }
        }
        Ok(Database {
            dir: dir.to_path_buf(),
            opts,
            policy,
            catalog,
            files,
        })
    }

    /// Opens the database in `dir`, creating it with `o` if there is none.
    /// An existing database keeps its own page size and policy.
    pub fn open_or_create(dir: &Path, o: DbOptions) -> Result<Database> {
        if dir.join(META_FILE).exists() {
            Database::open(dir, o.cache_pages)
        } else {
            Database::create(dir, o)
        }
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn page_size(&self) -> usize {
        self.opts.page_size
    }

    pub fn policy(&self) -> SplitPolicy {
        self.policy
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn relation(&mut self, name: &str) -> Option<&mut GridFile> {
        self.files.get_mut(&name.to_ascii_uppercase())
    }

    pub fn grid_stats(&self, name: &str) -> Option<GridStats> {
        self.files.get(&name.to_ascii_uppercase()).map(|f| f.stats())
    }

    /// Page accesses summed over every relation since the last reset.
    pub fn access_stats(&self) -> AccessStats {
        self.files
            .values()
            .fold(AccessStats::default(), |a, f| a + f.access_stats())
    }

    pub fn reset_access_stats(&mut self) {
        for f in self.files.values_mut() {
            f.reset_access_stats();
        }
    }

    pub fn flush(&mut self) -> Result<()> {
        for f in self.files.values_mut() {
            f.flush()?;
        }
        Ok(())
    }

    pub fn execute(&mut self, sql: &str) -> Result<QueryResult> {
        self.execute_with(sql, ExecOptions::default())
    }

    pub fn execute_with(&mut self, sql: &str, opts: ExecOptions) -> Result<QueryResult> {
        let bound = analyze(&parse(sql)?, &self.catalog)?;
        let out = self.run(bound, opts);
        self.flush()?;
        out
    }

    /// Binds and plans a SELECT without running it.
    pub fn plan(&mut self, sql: &str, opts: ExecOptions) -> Result<(BoundSelect, Plan)> {
        match analyze(&parse(sql)?, &self.catalog)? {
            Bound::Select(s) => {
                let p = plan_select(&s, &mut self.files, opts)?;
                Ok((s, p))
            }
            _ => Err(Error::Unsupported("only SELECT statements have a plan".into())),
        }
    }

    pub fn explain(&mut self, sql: &str) -> Result<String> {
        let (s, p) = self.plan(sql, ExecOptions::default())?;
        Ok(explain(&s, &p, &self.files))
    }

    fn writable(&mut self, rel: &str) -> Result<&mut GridFile> {
        if catalog::is_catalog(rel) {
            return Err(Error::CatalogRelation(rel.to_string()));
        }
        Ok(self.files.get_mut(rel).expect("catalogued relation is open"))
    }

    fn run(&mut self, bound: Bound, opts: ExecOptions) -> Result<QueryResult> {
        match bound {
            Bound::Select(s) => {
                let plan = plan_select(&s, &mut self.files, opts)?;
                let rows = run_select(&s, &plan, &mut self.files)?;
                Ok(QueryResult::Rows {
                    columns: s.headers,
                    rows,
                })
            }
            Bound::Insert { rel, tuple } => {
                self.writable(&rel)?.insert(&tuple)?;
                Ok(QueryResult::Count {
                    verb: "inserted",
                    count: 1,
                })
            }
            Bound::Delete { rel, filter } => {
                let f = self.writable(&rel)?;
                let (region, residual) = f.space().from_expr(&filter, 0)?;
                let n = f.delete_where(&region, &residual)?.len() as u64;
                Ok(QueryResult::Count {
                    verb: "deleted",
                    count: n,
                })
            }
            Bound::Update { rel, sets, filter } => {
                let f = self.writable(&rel)?;
                let (region, residual) = f.space().from_expr(&filter, 0)?;
                let old = f.delete_where(&region, &residual)?;
                for mut t in old.iter().cloned() {
                    for (a, v) in &sets {
                        t.0[*a] = v.clone();
                    }
                    f.insert(&t)?;
                }
                Ok(QueryResult::Count {
                    verb: "updated",
                    count: old.len() as u64,
                })
            }
            Bound::Create(schema) => {
                let f = GridFile::create(&self.dir, schema.clone(), self.policy, self.opts)?;
                self.files.insert(schema.name.clone(), f);
                self.record(&schema)?;
                self.catalog.insert(schema.clone());
                Ok(QueryResult::Done(format!("created {}", schema.name)))
            }
            Bound::Drop(name) => {
                for cat in [RELCAT, ATTRCAT] {
                    let f = self.files.get_mut(cat).unwrap();
                    let e = Expr::cmp(CmpOp::Eq, Expr::col(0, 0), Expr::Literal(Value::Char(name.clone())));
                    let (region, residual) = f.space().from_expr(&e, 0)?;
                    f.delete_where(&region, &residual)?;
                }
                self.catalog.remove(&name);
                if let Some(f) = self.files.remove(&name) {
                    f.close()?;
                }
                GridFile::destroy(&self.dir, &name)?;
                Ok(QueryResult::Done(format!("dropped {name}")))
            }
        }
    }

    /// Adds the catalog tuples describing `s`.
    fn record(&mut self, s: &crate::value::RelationSchema) -> Result<()> {
        let (rel, attrs): (Tuple, Vec<Tuple>) = Catalog::rows_for(s);
        self.files.get_mut(RELCAT).unwrap().insert(&rel)?;
        let ac = self.files.get_mut(ATTRCAT).unwrap();
        for a in &attrs {
            ac.insert(a)?;
        }
        Ok(())
    }
}
