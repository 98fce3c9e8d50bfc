//! Surface language: lexer, parser and abstract syntax.

pub mod ast;
pub mod lexer;
pub mod parser;

pub use ast::*;
pub use parser::{parse_defs_fragment, parse_expr_fragment, parse_program, ParseError};
