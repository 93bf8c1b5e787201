//! Parsing and printing of contract models, plus the fragment lexer and the
//! guard-expression parser.

pub mod dsl;
pub mod guard;
pub mod json;
pub mod lexer;

pub use dsl::{emit_dsl, parse_dsl, parse_dsl_with_sources, SourceMap};
pub use guard::{parse_guard_expr, BinaryOp, GuardAst, UnaryOp};
pub use json::{emit_json, parse_json, parse_json_in};
pub use lexer::{lex_fragment, Token, TokenKind};
