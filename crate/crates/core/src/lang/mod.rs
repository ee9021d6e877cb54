//! Front end for the mini-language: tokens, syntax tree, parser and printer.

mod ast;
mod lexer;
mod parser;
mod printer;

pub use ast::{Expr, SourceSpan};
pub use lexer::{tokenize, Delim, LexError, Op, Token, TokenKind};
pub use parser::{parse_program, ParseError, SyntaxError, MAX_NESTING};
pub use printer::{format_expr, format_real};

pub(crate) use printer::write_string_literal;
