//! MiniLang: a small Java-like object language with externs, boxed integers
//! and NPE-only exceptions.

pub mod ast;
mod lexer;
mod parser;
mod printer;
mod resolve;

use std::fmt;

pub use ast::*;
pub use parser::parse;
pub use printer::pretty_print;
pub use resolve::{resolve, ClassTable};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{file}:{line}:{col}: {message}")]
pub struct ParseError {
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ResolveError {
    pub loc: Location,
    pub message: String,
}

impl fmt::Display for ResolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.loc, self.message)
    }
}

/// Front-end failure: either syntax or static checking.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("resolve error: {0}")]
    Resolve(#[from] ResolveError),
}

/// Parses and resolves in one step.
pub fn load(source: &str, filename: &str) -> Result<Program, FrontendError> {
    let program = parse(source, filename)?;
    Ok(resolve(program)?)
}
