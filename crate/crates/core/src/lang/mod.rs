//! The textual front end: lexer, parser, printer and evaluator.

pub mod ast;
pub mod eval;
pub mod lexer;
pub mod mermaid;
pub mod parser;
mod print;

pub use eval::{Session, Value};
pub use parser::{
    parse, parse_configuration, parse_domain, parse_global, parse_local, parse_process, parse_repository,
};
