//! `gridrel`: interactive shell, script runner and splitting-policy
//! experiment for grid-file databases.

mod session;

use std::fs;
use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gridrel::database::MIN_DB_PAGE_SIZE;
use gridrel::experiment;
use gridrel::query::render::Format;
use gridrel::storage::MAX_PAGE_SIZE;
use gridrel::{Database, DbOptions, SplitPolicy};

use session::{Failure, Session, Step};

const EXIT_STATEMENT: u8 = 1;
const EXIT_IO: u8 = 3;
const CACHE_PAGES: usize = 256;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Roundrobin,
    Midpoint,
}

impl From<PolicyArg> for SplitPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Roundrobin => SplitPolicy::RoundRobin,
            PolicyArg::Midpoint => SplitPolicy::MidpointFirst,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Aligned,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "gridrel", version, about = "Relational database on grid files")]
struct Cli {
    /// Database directory, created if missing. Without it a temporary
    /// database is used and discarded on exit.
    #[arg(long, global = true)]
    db: Option<PathBuf>,

    /// Splitting policy of a new database.
    #[arg(long, value_enum, global = true)]
    policy: Option<PolicyArg>,

    /// Page size in bytes of a new database.
    #[arg(long, global = true, value_parser = page_size)]
    page_size: Option<usize>,

    /// Read every page from disk so access counts are exact.
    #[arg(long, global = true)]
    no_cache: bool,

    /// Run statements from FILE instead of standard input.
    #[arg(long, value_name = "FILE")]
    script: Option<PathBuf>,

    /// Stop at the first failing statement and exit with status 1.
    #[arg(long)]
    strict: bool,

    #[arg(long, value_enum, default_value = "aligned", global = true)]
    format: FormatArg,

    /// Seed of the experiment's data generator.
    #[arg(long, default_value_t = 1, global = true)]
    seed: u64,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load synthetic data under both splitting policies and print a CSV
    /// report of grid statistics and per-query page reads.
    Experiment {
        /// Tuples per relation.
        #[arg(long, default_value_t = 5000)]
        tuples: usize,
        #[arg(long, value_enum, default_value = "books")]
        dataset: Dataset,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Dataset {
    /// BOOKS gridded on all six attributes, and SMALLBOOKS on three.
    Books,
    /// One uniform attribute, the rest sharing a prefix.
    Skewed,
}

fn page_size(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if (MIN_DB_PAGE_SIZE..=MAX_PAGE_SIZE).contains(&n) {
        Ok(n)
    } else {
        Err(format!("must be between {MIN_DB_PAGE_SIZE} and {MAX_PAGE_SIZE}"))
    }
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("gridrel: {msg}");
    ExitCode::from(code)
}

fn options(cli: &Cli) -> DbOptions {
    let d = DbOptions::default();
    DbOptions {
        page_size: cli.page_size.unwrap_or(d.page_size),
        policy: cli.policy.map_or(d.policy, SplitPolicy::from),
        cache_pages: if cli.no_cache { 0 } else { CACHE_PAGES },
    }
}

fn open(cli: &Cli, path: &Path) -> Result<Database, String> {
    let o = options(cli);
    let db = Database::open_or_create(path, o).map_err(|e| e.to_string())?;
    if cli.policy.is_some() && db.policy() != o.policy {
        eprintln!(
            "gridrel: database was created with policy {}; --policy ignored",
            db.policy()
        );
    }
    if cli.page_size.is_some() && db.page_size() != o.page_size {
        eprintln!(
            "gridrel: database uses {}-byte pages; --page-size ignored",
            db.page_size()
        );
    }
    Ok(db)
}

fn run_experiment(cli: &Cli, tuples: usize, dataset: Dataset) -> ExitCode {
    let tmp;
    let dir = match &cli.db {
        Some(p) => {
            if let Err(e) = fs::create_dir_all(p) {
                return fail(EXIT_IO, format!("{}: {e}", p.display()));
            }
            p.clone()
        }
        None => match tempfile::tempdir() {
            Ok(t) => {
                tmp = t;
                tmp.path().to_path_buf()
            }
            Err(e) => return fail(EXIT_IO, e),
        },
    };
    let page_size = options(cli).page_size;
    let report = match dataset {
        Dataset::Books => experiment::books_experiment(&dir, tuples, cli.seed, page_size),
        Dataset::Skewed => {
            let spec = experiment::skewed(tuples, cli.seed);
            let q = experiment::standard_queries(&spec.relation);
            experiment::compare(&dir, &spec, page_size, &q).map(|runs| experiment::Report { runs })
        }
    };
    match report {
        Ok(r) => {
            print!("{}", r.to_csv());
            ExitCode::SUCCESS
        }
        Err(e @ gridrel::Error::Io(_)) => fail(EXIT_IO, e),
        Err(e) => fail(EXIT_STATEMENT, e),
    }
}

/// Feeds `input` line by line. Statement errors are reported and skipped
/// unless `strict`.
fn drive<W: Write>(s: &mut Session<W>, input: impl BufRead, strict: bool, prompt: bool) -> ExitCode {
    let mut failed = false;
    let show_prompt = |pending: bool| {
        if prompt {
            print!("{}", if pending { "   ...> " } else { "gridrel> " });
            let _ = io::stdout().flush();
        }
    };
    show_prompt(false);
    for line in input.lines() {
        let line = match line {
            Ok(l) => l,
            Err(e) => return fail(EXIT_IO, format!("cannot read input: {e}")),
        };
        match s.feed_line(&line) {
            Ok(Step::Continue) => {}
            Ok(Step::Quit) => break,
            Err(Failure::Io(m)) => return fail(EXIT_IO, m),
            Err(Failure::Statement(m)) => {
                eprintln!("error: {m}");
                failed = true;
                if strict {
                    let _ = s.flush();
                    return ExitCode::from(EXIT_STATEMENT);
                }
            }
        }
        if let Err(Failure::Io(m)) = s.flush() {
            return fail(EXIT_IO, m);
        }
        show_prompt(s.has_pending());
    }
    match s.finish() {
        Ok(()) => {}
        Err(Failure::Io(m)) => return fail(EXIT_IO, m),
        Err(Failure::Statement(m)) => {
            eprintln!("error: {m}");
            failed = true;
        }
    }
    if let Err(Failure::Io(m)) = s.flush() {
        return fail(EXIT_IO, m);
    }
    if strict && failed {
        ExitCode::from(EXIT_STATEMENT)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(Command::Experiment { tuples, dataset }) = cli.command {
        return run_experiment(&cli, tuples, dataset);
    }
    let tmp;
    let path = match &cli.db {
        Some(p) => p.clone(),
        None => match tempfile::tempdir() {
            Ok(t) => {
                tmp = t;
                tmp.path().join("db")
            }
            Err(e) => return fail(EXIT_IO, e),
        },
    };
    let db = match open(&cli, &path) {
        Ok(db) => db,
        Err(e) => return fail(EXIT_IO, e),
    };
    let format = match cli.format {
        FormatArg::Aligned => Format::Aligned,
        FormatArg::Csv => Format::Csv,
    };
    let mut s = Session::new(db, format, io::stdout().lock());
    match &cli.script {
        Some(file) => match fs::File::open(file) {
            Ok(f) => drive(&mut s, io::BufReader::new(f), cli.strict, false),
            Err(e) => fail(EXIT_IO, format!("{}: {e}", file.display())),
        },
        None => {
            let stdin = io::stdin();
            let prompt = stdin.is_terminal();
            if prompt && cli.db.is_none() {
                eprintln!("using a temporary database; pass --db PATH to keep it");
            }
            drive(&mut s, stdin.lock(), cli.strict, prompt)
        }
    }
}
