//! A relational storage engine built on the grid file.
//!
//! Every relation is stored in one grid file over a chosen subset of its
//! attributes, and every query is answered by region scans over that grid.

pub mod database;
pub mod directory;
pub mod error;
pub mod experiment;
pub mod expr;
pub mod gridfile;
pub mod query;
pub mod region;
pub mod scales;
pub mod storage;
pub mod value;

pub use database::{Database, DbOptions, QueryResult};
pub use error::{Error, Result};
pub use expr::{CmpOp, ColumnRef, Expr};
pub use gridfile::{GridFile, GridStats, SplitPolicy};
pub use query::plan::ExecOptions;
pub use region::{Interval, Parallelepiped, RegionSet, RegionSpace};
pub use storage::{AccessStats, PageId, Pager, PagerOptions};
pub use value::{Attribute, DataType, RelationSchema, Tuple, Value};
