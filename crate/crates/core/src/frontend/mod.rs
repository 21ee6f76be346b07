//! Surface language: parsing, macro expansion, type checking.

pub mod ast;
pub mod expand;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod typeck;

pub use ast::{Program, Span};
pub use expand::{expand_macros, ExpandError};
pub use parser::{parse, SyntaxError};
pub use pretty::pretty_program;
pub use typeck::{type_check, CheckError};

use crate::ir::CoreSpec;

/// Source of the standard library.
pub const STDLIB_SOURCE: &str = include_str!("stdlib.tessla");

/// The parsed standard library.
pub fn stdlib() -> Program {
    parse(STDLIB_SOURCE).expect("standard library parses")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Expand(#[from] ExpandError),
    #[error(transparent)]
    Check(#[from] CheckError),
}

/// Parses, expands and type-checks `src` against the standard library.
pub fn compile(src: &str) -> Result<CoreSpec, CompileError> {
    let ast = parse(src)?;
    let expanded = expand_macros(&ast, &stdlib())?;
    Ok(type_check(&expanded)?)
}
