use std::path::PathBuf;

use thiserror::Error;

use crate::query::SyntaxError;
use crate::storage::PageId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("unknown page {0}")]
    UnknownPage(PageId),

    #[error("page buffer has {got} bytes, expected {expected}")]
    WrongLength { expected: usize, got: usize },

    #[error("storage full: {0}")]
    StorageFull(&'static str),

    #[error("free of page {0} is not allowed")]
    InvalidFree(PageId),

    #[error("{} already exists", .0.display())]
    Exists(PathBuf),

    #[error("{} not found", .0.display())]
    NotFound(PathBuf),

    #[error("corrupt header: {0}")]
    CorruptHeader(String),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("invalid tuple: {0}")]
    InvalidTuple(String),

    #[error("scale value already present on dimension {dim}")]
    DuplicateScaleValue { dim: usize },

    #[error("directory piece has {got} elements, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("directory element index {index} out of range (piece has {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("directory already initialized")]
    AlreadyInitialized,

    #[error("constant out of domain: {0}")]
    ConstantOutOfDomain(String),

    #[error(transparent)]
    Syntax(#[from] SyntaxError),

    #[error("unknown relation {0}")]
    UnknownRelation(String),

    #[error("unknown column {0}")]
    UnknownColumn(String),

    #[error("ambiguous column {0}")]
    AmbiguousColumn(String),

    #[error("type mismatch: {0}")]
    TypeMismatch(String),

    #[error("relation {0} already exists")]
    DuplicateRelation(String),

    #[error("relation {0} is a catalog relation")]
    CatalogRelation(String),

    #[error("{0}")]
    Unsupported(String),
}
