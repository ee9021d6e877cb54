use num_bigint::BigInt;
use thiserror::Error;

use super::ast::{Expr, SourceSpan};
use super::lexer::{tokenize, Delim, LexError, Op, Token, TokenKind};

/// Nesting bound for the recursive-descent parser; model output is untrusted.
pub const MAX_NESTING: usize = 512;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("parse error at {span}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub span: SourceSpan,
    pub expected: Vec<String>,
    pub found: String,
}

/// Anything that stops a program from reaching the evaluator.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl SyntaxError {
    pub fn span(&self) -> SourceSpan {
        match self {
            SyntaxError::Lex(e) => e.span,
            SyntaxError::Parse(e) => e.span,
        }
    }
}

// Binding powers, loosest to tightest. `;` sits below all of these and is
// handled by `parse_sequence`.
pub(crate) mod prec {
    pub const COMPOUND: u8 = 5;
    pub const ASSIGN: u8 = 10;
    pub const RULE: u8 = 20;
    pub const FUNCTION: u8 = 30;
    pub const OR: u8 = 40;
    pub const AND: u8 = 50;
    pub const NOT: u8 = 55;
    pub const COMPARE: u8 = 60;
    pub const ADD: u8 = 70;
    pub const MUL: u8 = 80;
    pub const NEG: u8 = 85;
    pub const POWER: u8 = 90;
    pub const APPLY: u8 = 100;
    pub const ATOM: u8 = 110;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Assoc {
    Left,
    Right,
}

/// Binary operator table: head symbol, precedence, associativity.
pub(crate) fn binary_info(op: Op) -> Option<(&'static str, u8, Assoc)> {
    use prec::*;
    let info = match op {
        Op::Set => ("Set", ASSIGN, Assoc::Right),
        Op::SetDelayed => ("SetDelayed", ASSIGN, Assoc::Right),
        Op::Rule => ("Rule", RULE, Assoc::Right),
        Op::Or => ("Or", OR, Assoc::Left),
        Op::And => ("And", AND, Assoc::Left),
        Op::Equal => ("Equal", COMPARE, Assoc::Left),
        Op::Unequal => ("Unequal", COMPARE, Assoc::Left),
        Op::Less => ("Less", COMPARE, Assoc::Left),
        Op::LessEqual => ("LessEqual", COMPARE, Assoc::Left),
        Op::Greater => ("Greater", COMPARE, Assoc::Left),
        Op::GreaterEqual => ("GreaterEqual", COMPARE, Assoc::Left),
        Op::Plus => ("Plus", ADD, Assoc::Left),
        Op::Minus => ("Subtract", ADD, Assoc::Left),
        Op::Times => ("Times", MUL, Assoc::Left),
        Op::Divide => ("Divide", MUL, Assoc::Left),
        Op::Power => ("Power", POWER, Assoc::Right),
        Op::Amp | Op::Not | Op::Semi | Op::Comma => return None,
    };
    Some(info)
}

/// Parses a complete program. A `;`-separated statement sequence becomes
/// `CompoundExpression[...]`; a trailing `;` contributes a final `Null`.
pub fn parse_program(source: &str) -> Result<Expr, SyntaxError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0, depth: 0, eof: eof_span(source) };
    let expr = parser.parse_sequence()?;
    if let Some(tok) = parser.peek() {
        return Err(parser.error_at(tok.span, &["end of input", "`;`"], &tok.kind.to_string()).into());
    }
    Ok(expr)
}

fn eof_span(source: &str) -> SourceSpan {
    let line = source.matches('\n').count() as u32 + 1;
    let column = source.rsplit('\n').next().map_or(0, |l| l.chars().count()) as u32 + 1;
    SourceSpan::new(source.len(), source.len(), line, column)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
    eof: SourceSpan,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn current_span(&self) -> SourceSpan {
        self.peek().map_or(self.eof, |t| t.span)
    }

    fn advance(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn at_op(&self, op: Op) -> bool {
        matches!(self.peek_kind(), Some(TokenKind::Operator(o)) if *o == op)
    }

    fn at_close(&self, delim: Delim) -> bool {
        matches!(self.peek_kind(), Some(TokenKind::CloseDelim(d)) if *d == delim)
    }

    fn error_at(&self, span: SourceSpan, expected: &[&str], found: &str) -> ParseError {
        ParseError { span, expected: expected.iter().map(|s| s.to_string()).collect(), found: found.to_string() }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let found = self.peek().map_or_else(|| "end of input".to_string(), |t| format!("`{}`", t.kind));
        self.error_at(self.current_span(), expected, &found)
    }

    fn expect_close(&mut self, delim: Delim) -> Result<(), ParseError> {
        if self.at_close(delim) {
            self.advance();
            Ok(())
        } else {
            let want = format!("`{}`", delim.close_str());
            Err(self.unexpected(&[&want]))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(self.error_at(
                self.current_span(),
                &[&format!("at most {MAX_NESTING} levels of nesting")],
                "deeper nesting",
            ));
        }
        Ok(())
    }

    /// Statement sequence: `expr (; expr)* ;?`
    fn parse_sequence(&mut self) -> Result<Expr, ParseError> {
        let first = self.parse_expr(0)?;
        if !self.at_op(Op::Semi) {
            return Ok(first);
        }
        let mut stmts = vec![first];
        while self.at_op(Op::Semi) {
            self.advance();
            if self.at_sequence_end() {
                stmts.push(Expr::sym("Null"));
                break;
            }
            stmts.push(self.parse_expr(0)?);
        }
        Ok(Expr::apply("CompoundExpression", stmts))
    }

    fn at_sequence_end(&self) -> bool {
        matches!(
            self.peek_kind(),
            None | Some(TokenKind::CloseDelim(_))
                | Some(TokenKind::Operator(Op::Comma))
                | Some(TokenKind::Operator(Op::Semi))
        )
    }

    fn parse_expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        self.enter()?;
        let result = stacker::maybe_grow(64 * 1024, 1024 * 1024, || self.parse_expr_inner(min_bp));
        self.depth -= 1;
        result
    }

    fn parse_expr_inner(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_prefix()?;

        while let Some(kind) = self.peek_kind() {
            match kind {
                TokenKind::Operator(Op::Amp) => {
                    if prec::FUNCTION < min_bp {
                        break;
                    }
                    self.advance();
                    lhs = Expr::pure_fn(lhs);
                }
                TokenKind::OpenDelim(Delim::Bracket) => {
                    if prec::APPLY < min_bp {
                        break;
                    }
                    self.advance();
                    if matches!(self.peek_kind(), Some(TokenKind::OpenDelim(Delim::Bracket))) {
                        self.advance();
                        let mut args = vec![lhs];
                        args.extend(self.parse_args(Delim::Bracket)?);
                        self.expect_close(Delim::Bracket)?;
                        self.expect_close(Delim::Bracket)?;
                        if args.len() < 2 {
                            return Err(self.unexpected(&["part index"]));
                        }
                        lhs = Expr::apply("Part", args);
                    } else {
                        let args = self.parse_args(Delim::Bracket)?;
                        self.expect_close(Delim::Bracket)?;
                        lhs = Expr::Apply(Box::new(lhs), args);
                    }
                }
                TokenKind::Operator(op) => {
                    let Some((head, bp, assoc)) = binary_info(*op) else { break };
                    if bp < min_bp {
                        break;
                    }
                    self.advance();
                    let rhs_bp = match assoc {
                        Assoc::Left => bp + 1,
                        Assoc::Right => bp,
                    };
                    let rhs = self.parse_expr(rhs_bp)?;
                    lhs = Expr::apply(head, vec![lhs, rhs]);
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn parse_prefix(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.unexpected(&["expression"]));
        };
        match tok.kind {
            TokenKind::IntegerLit(n) => {
                self.advance();
                Ok(Expr::Integer(BigInt::from(n)))
            }
            TokenKind::RealLit(x) => {
                self.advance();
                Ok(Expr::Real(x))
            }
            TokenKind::StringLit(s) => {
                self.advance();
                Ok(Expr::Str(s))
            }
            TokenKind::Identifier(name) => {
                self.advance();
                Ok(Expr::Sym(name))
            }
            TokenKind::Slot(n) => {
                self.advance();
                Ok(Expr::Slot(n))
            }
            TokenKind::Operator(Op::Minus) => {
                self.advance();
                let operand = self.parse_expr(prec::NEG)?;
                Ok(Expr::apply("Minus", vec![operand]))
            }
            TokenKind::Operator(Op::Plus) => {
                self.advance();
                self.parse_expr(prec::NEG)
            }
            TokenKind::Operator(Op::Not) => {
                self.advance();
                let operand = self.parse_expr(prec::NOT)?;
                Ok(Expr::apply("Not", vec![operand]))
            }
            TokenKind::OpenDelim(Delim::Paren) => {
                self.advance();
                self.enter()?;
                let inner = self.parse_sequence();
                self.depth -= 1;
                let inner = inner?;
                self.expect_close(Delim::Paren)?;
                Ok(inner)
            }
            TokenKind::OpenDelim(Delim::Brace) => {
                self.advance();
                let items = self.parse_args(Delim::Brace)?;
                self.expect_close(Delim::Brace)?;
                Ok(Expr::List(items))
            }
            TokenKind::OpenDelim(Delim::Assoc) => {
                self.advance();
                let start = self.pos;
                let items = self.parse_args(Delim::Assoc)?;
                for (i, item) in items.iter().enumerate() {
                    if item.args_of("Rule").is_none_or(|a| a.len() != 2) {
                        let span = self.tokens.get(start + i).map_or(self.eof, |t| t.span);
                        return Err(self.error_at(span, &["`key -> value`"], &format!("`{item}`")));
                    }
                }
                self.expect_close(Delim::Assoc)?;
                Ok(Expr::Assoc(items))
            }
            _ => Err(self.unexpected(&["expression"])),
        }
    }

    /// Comma-separated arguments up to (not including) the closing delimiter.
    fn parse_args(&mut self, close: Delim) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::new();
        if self.at_close(close) {
            return Ok(args);
        }
        loop {
            args.push(self.parse_sequence()?);
            if self.at_op(Op::Comma) {
                self.advance();
                continue;
            }
            if self.at_close(close) {
                return Ok(args);
            }
            let want = format!("`{}`", close.close_str());
            return Err(self.unexpected(&["`,`", &want]));
        }
    }
}
