//! Splitting-policy comparison on seeded synthetic data.
//!
//! The same tuples are loaded into one database per policy; the report
//! lists bucket occupancy, directory redundancy, partitions per attribute
//! and the page accesses of a fixed query list.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Zipf};

use crate::database::{Database, DbOptions};
use crate::error::Result;
use crate::gridfile::{GridStats, SplitPolicy};
use crate::value::{Attribute, DataType, Tuple, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    /// Letters (CHAR) or integers in `lo..=hi` (INTEGER).
    Uniform { lo: i32, hi: i32 },
    /// All values share their leading bytes; only the last `free` bytes
    /// (CHAR) or the low `free` bits (INTEGER) vary. The shared part covers
    /// at least the first key word.
    ConstantPrefix { free: u32 },
    /// Rank drawn from a Zipf law over `n` distinct values.
    Zipf { n: u32, exponent: f64 },
    /// `value` with probability `p`, otherwise `rest`.
    Planted {
        value: Value,
        p: f64,
        rest: Box<Distribution>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub relation: String,
    pub tuples: usize,
    pub seed: u64,
    pub attributes: Vec<(Attribute, Distribution)>,
    /// Grid attribute names.
    pub grid: Vec<String>,
}

const LETTERS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";

fn letters(r: &mut ChaCha8Rng, n: usize) -> String {
    (0..n)
        .map(|_| LETTERS[r.random_range(0..LETTERS.len())] as char)
        .collect()
}

fn draw(d: &Distribution, ty: DataType, r: &mut ChaCha8Rng) -> Value {
    match (d, ty) {
        (Distribution::Planted { value, p, rest }, _) => {
            if r.random_bool(*p) {
                value.clone()
            } else {
                draw(rest, ty, r)
            }
        }
        (Distribution::Uniform { lo, hi }, DataType::Integer) => Value::Int(r.random_range(*lo..=*hi)),
        (Distribution::Uniform { .. }, DataType::Char(n)) => Value::Char(letters(r, n as usize)),
        (Distribution::ConstantPrefix { free }, DataType::Integer) => {
            let bits = (*free).min(16);
            Value::Int(0x4000_0000 + r.random_range(0..1i32 << bits))
        }
        (Distribution::ConstantPrefix { free }, DataType::Char(n)) => {
            let n = n as usize;
            let free = (*free as usize)
                .min(n.saturating_sub(crate::value::WORD))
                .max(usize::from(n <= crate::value::WORD));
            let prefix: String = "PREFIX".chars().cycle().take(n - free).collect();
            Value::Char(prefix + &letters(r, free))
        }
        (Distribution::Zipf { n, exponent }, ty) => {
            let z = Zipf::new(*n as f64, *exponent).expect("valid zipf parameters");
            let rank = z.sample(r) as i32;
            match ty {
                DataType::Integer => Value::Int(rank),
                DataType::Char(w) => {
                    let s = format!("V{rank}");
                    Value::Char(s.chars().take(w as usize).collect())
                }
            }
        }
    }
}

pub fn generate(spec: &DatasetSpec) -> Vec<Tuple> {
    let mut r = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.tuples)
        .map(|_| Tuple(spec.attributes.iter().map(|(a, d)| draw(d, a.ty, &mut r)).collect()))
        .collect()
}

fn books_attributes() -> Vec<Attribute> {
    vec![
        Attribute::new("ACNO", DataType::Char(5)),
        Attribute::new("TITLE", DataType::Char(50)),
        Attribute::new("AUTHOR", DataType::Char(25)),
        Attribute::new("CLASSNO", DataType::Char(5)),
        Attribute::new("PUBLISHER", DataType::Char(25)),
        Attribute::new("YEAR", DataType::Integer),
    ]
}

/// A library catalogue: accession numbers share a prefix, titles are
/// close to uniform, authors and publishers follow Zipf laws.
pub fn books(tuples: usize, seed: u64) -> DatasetSpec {
    let dists = vec![
        Distribution::ConstantPrefix { free: 1 },
        Distribution::Planted {
            value: Value::Char("DISTRIBUTED CONTROL".into()),
            p: 0.002,
            rest: Box::new(Distribution::Uniform { lo: 0, hi: 0 }),
        },
        Distribution::Planted {
            value: Value::Char("ULMAN".into()),
            p: 0.005,
            rest: Box::new(Distribution::Zipf { n: 2000, exponent: 0.8 }),
        },
        Distribution::ConstantPrefix { free: 2 },
        Distribution::Zipf { n: 60, exponent: 1.1 },
        Distribution::Uniform { lo: 50, hi: 89 },
    ];
    let attributes: Vec<_> = books_attributes().into_iter().zip(dists).collect();
    let grid = attributes.iter().map(|(a, _)| a.name.clone()).collect();
    DatasetSpec {
        relation: "BOOKS".into(),
        tuples,
        seed,
        attributes,
        grid,
    }
}

/// The same data gridded on TITLE, AUTHOR and YEAR only.
pub fn smallbooks(tuples: usize, seed: u64) -> DatasetSpec {
    DatasetSpec {
        relation: "SMALLBOOKS".into(),
        grid: vec!["TITLE".into(), "AUTHOR".into(), "YEAR".into()],
        ..books(tuples, seed)
    }
}

/// One uniform attribute (TITLE); every other attribute is constant-prefixed.
pub fn skewed(tuples: usize, seed: u64) -> DatasetSpec {
    let mut s = books(tuples, seed);
    s.relation = "SKEWED".into();
    for (a, d) in &mut s.attributes {
        *d = match a.ty {
            _ if a.name == "TITLE" => Distribution::Uniform { lo: 0, hi: 0 },
            // a one-word key with a shared first word is a constant
            DataType::Integer => Distribution::ConstantPrefix { free: 0 },
            DataType::Char(_) => Distribution::ConstantPrefix { free: 2 },
        };
    }
    s
}

/// The queries of the comparison, over relation `rel`.
pub fn standard_queries(rel: &str) -> Vec<String> {
    [
        "TITLE = 'DISTRIBUTED CONTROL'",
        "AUTHOR = 'ULMAN'",
        "YEAR = 80",
        "(YEAR = 80) and (TITLE = 'DISTRIBUTED CONTROL')",
    ]
    .iter()
    .map(|w| format!("select * from {rel} where {w}"))
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRun {
    pub relation: String,
    pub policy: SplitPolicy,
    pub stats: GridStats,
    /// Grid attribute names in dimension order.
    pub dims: Vec<String>,
    /// `(query, page reads, result rows)`.
    pub queries: Vec<(String, u64, usize)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub runs: Vec<PolicyRun>,
}

/// Loads `spec` into a fresh database per policy under `dir` and runs
/// `queries` against each.
pub fn compare(dir: &Path, spec: &DatasetSpec, page_size: usize, queries: &[String]) -> Result<Vec<PolicyRun>> {
    let tuples = generate(spec);
    let mut runs = Vec::new();
    for policy in [SplitPolicy::RoundRobin, SplitPolicy::MidpointFirst] {
        let sub = dir.join(format!("{}-{policy}", spec.relation.to_ascii_lowercase()));
        let mut db = Database::create(
            &sub,
            DbOptions {
                page_size,
                policy,
                cache_pages: 0,
            },
        )?;
        let cols: Vec<String> = spec
            .attributes
            .iter()
            .map(|(a, _)| format!("{} {}", a.name, a.ty))
            .collect();
        db.execute(&format!(
            "create table {} ({}) grid ({})",
            spec.relation,
            cols.join(", "),
            spec.grid.join(", ")
        ))?;
        let f = db.relation(&spec.relation).expect("just created");
        for t in &tuples {
            f.insert(t)?;
        }
        let stats = f.stats();
        let dims = f
            .schema()
            .grid
            .iter()
            .map(|&i| f.schema().attributes[i].name.clone())
            .collect();
        let mut qs = Vec::new();
        for q in queries {
            db.reset_access_stats();
            let n = match db.execute(q)? {
                crate::database::QueryResult::Rows { rows, .. } => rows.len(),
                _ => 0,
            };
            qs.push((q.clone(), db.access_stats().reads(), n));
        }
        runs.push(PolicyRun {
            relation: spec.relation.clone(),
            policy,
            stats,
            dims,
            queries: qs,
        });
    }
    Ok(runs)
}

/// BOOKS and SMALLBOOKS under both policies.
pub fn books_experiment(dir: &Path, tuples: usize, seed: u64, page_size: usize) -> Result<Report> {
    let mut report = Report::default();
    for spec in [books(tuples, seed), smallbooks(tuples, seed)] {
        let q = standard_queries(&spec.relation);
        report.runs.extend(compare(dir, &spec, page_size, &q)?);
    }
    Ok(report)
}

impl Report {
    /// Two CSV tables separated by a blank line: per-run statistics, then
    /// per-query page reads. Output depends only on the data and settings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("relation,policy,tuples,buckets,occupancy,redundancy,partitions\n");
        for r in &self.runs {
            let parts: Vec<String> = r
                .dims
                .iter()
                .zip(&r.stats.partitions)
                .map(|(d, p)| format!("{d}={p}"))
                .collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{:.3},{:.3},{}",
                r.relation,
                r.policy,
                r.stats.tuples,
                r.stats.buckets,
                r.stats.occupancy,
                r.stats.redundancy,
                parts.join(" ")
            );
        }
        out.push_str("\nrelation,policy,query,reads,rows\n");
        for r in &self.runs {
            for (q, reads, rows) in &r.queries {
                let _ = writeln!(
                    out,
                    "{},{},\"{}\",{reads},{rows}",
                    r.relation,
                    r.policy,
                    q.replace('"', "\"\"")
                );
            }
        }
        out
    }
}
