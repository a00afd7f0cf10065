//! Statement parsing, planning and execution.

pub mod analyze;
pub mod ast;
pub mod catalog;
mod error;
pub mod exec;
pub mod lexer;
pub mod parser;
pub mod plan;
pub mod render;

pub use error::SyntaxError;
pub use parser::parse;
