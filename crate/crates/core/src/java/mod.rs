//! A parser for the subset of Java needed by keyword extraction and usage-graph
//! construction ("java-lite").
//!
//! Declarations (package, imports, types, fields, methods) are parsed fully.
//! Method bodies cover declarations, assignments, chained and nested calls,
//! object creation, `return`, `if`/`else`, loops, `try`/`catch`/`finally`,
//! `throw` and classic `switch`. Other constructs are consumed as opaque
//! statements which still expose the calls they contain.

mod ast;
mod keywords;
mod lexer;
mod parser;
mod print;
mod visit;

pub use ast::*;
pub use keywords::{is_reserved, JAVA_RESERVED};
pub use print::{print_expr, print_unit};
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use visit::{method_calls, walk_exprs, walk_stmts};
pub(crate) use visit::render_expr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

pub fn parse_compilation_unit(source: &str) -> Result<CompilationUnit, SyntaxError> {
    parser::parse(source)
}

/// Identifier and literal tokens of the declaration in source order.
pub fn method_tokens(method: &MethodDecl) -> &[String] {
    &method.tokens
}
