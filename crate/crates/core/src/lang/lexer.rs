use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

use super::ast::SourceSpan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    SetDelayed,
    Set,
    Equal,
    Unequal,
    LessEqual,
    GreaterEqual,
    Less,
    Greater,
    Plus,
    Minus,
    Times,
    Divide,
    Power,
    Rule,
    Amp,
    And,
    Or,
    Not,
    Semi,
    Comma,
}

impl Op {
    pub fn as_str(self) -> &'static str {
        match self {
            Op::SetDelayed => ":=",
            Op::Set => "=",
            Op::Equal => "==",
            Op::Unequal => "!=",
            Op::LessEqual => "<=",
            Op::GreaterEqual => ">=",
            Op::Less => "<",
            Op::Greater => ">",
            Op::Plus => "+",
            Op::Minus => "-",
            Op::Times => "*",
            Op::Divide => "/",
            Op::Power => "^",
            Op::Rule => "->",
            Op::Amp => "&",
            Op::And => "&&",
            Op::Or => "||",
            Op::Not => "!",
            Op::Semi => ";",
            Op::Comma => ",",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Delim {
    Paren,
    Bracket,
    Brace,
    Assoc,
}

impl Delim {
    pub fn open_str(self) -> &'static str {
        match self {
            Delim::Paren => "(",
            Delim::Bracket => "[",
            Delim::Brace => "{",
            Delim::Assoc => "<|",
        }
    }

    pub fn close_str(self) -> &'static str {
        match self {
            Delim::Paren => ")",
            Delim::Bracket => "]",
            Delim::Brace => "}",
            Delim::Assoc => "|>",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    /// Non-negative magnitude; a leading `-` is a separate operator token.
    IntegerLit(BigUint),
    RealLit(f64),
    StringLit(String),
    Identifier(String),
    Slot(u32),
    Operator(Op),
    OpenDelim(Delim),
    CloseDelim(Delim),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::IntegerLit(n) => write!(f, "{n}"),
            TokenKind::RealLit(x) => write!(f, "{x}"),
            TokenKind::StringLit(s) => write!(f, "{s:?}"),
            TokenKind::Identifier(s) => f.write_str(s),
            TokenKind::Slot(1) => f.write_str("#"),
            TokenKind::Slot(n) => write!(f, "#{n}"),
            TokenKind::Operator(op) => f.write_str(op.as_str()),
            TokenKind::OpenDelim(d) => f.write_str(d.open_str()),
            TokenKind::CloseDelim(d) => f.write_str(d.close_str()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("lex error at {span}: {message}")]
pub struct LexError {
    pub span: SourceSpan,
    pub message: String,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn mark(&self) -> (usize, u32, u32) {
        (self.pos, self.line, self.column)
    }

    fn span_from(&self, mark: (usize, u32, u32)) -> SourceSpan {
        SourceSpan::new(mark.0, self.pos, mark.1, mark.2)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '$'
}

/// Splits `source` into tokens, skipping whitespace and `(* ... *)` comments
/// (which nest).
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor { src: source, pos: 0, line: 1, column: 1 };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let mark = cur.mark();

        if c == '(' && cur.peek_at(1) == Some('*') {
            skip_comment(&mut cur, mark)?;
            continue;
        }

        let kind = if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            lex_number(&mut cur, mark)?
        } else if is_ident_start(c) {
            let mut name = String::new();
            while let Some(c) = cur.peek().filter(|&c| is_ident_continue(c)) {
                name.push(c);
                cur.bump();
            }
            TokenKind::Identifier(name)
        } else if c == '"' {
            lex_string(&mut cur, mark)?
        } else if c == '#' {
            cur.bump();
            let mut digits = String::new();
            while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                digits.push(d);
                cur.bump();
            }
            let index = if digits.is_empty() {
                1
            } else {
                match digits.parse::<u32>() {
                    Ok(n) if n >= 1 => n,
                    _ => {
                        return Err(LexError {
                            span: cur.span_from(mark),
                            message: format!("invalid slot index #{digits}"),
                        })
                    }
                }
            };
            TokenKind::Slot(index)
        } else {
            lex_punct(&mut cur, mark)?
        };

        tokens.push(Token { kind, span: cur.span_from(mark) });
    }
    Ok(tokens)
}

fn skip_comment(cur: &mut Cursor<'_>, mark: (usize, u32, u32)) -> Result<(), LexError> {
    cur.bump();
    cur.bump();
    let mut depth = 1usize;
    while depth > 0 {
        match cur.bump() {
            Some('(') if cur.peek() == Some('*') => {
                cur.bump();
                depth += 1;
            }
            Some('*') if cur.peek() == Some(')') => {
                cur.bump();
                depth -= 1;
            }
            Some(_) => {}
            None => return Err(LexError { span: cur.span_from(mark), message: "unterminated comment".into() }),
        }
    }
    Ok(())
}

fn lex_number(cur: &mut Cursor<'_>, mark: (usize, u32, u32)) -> Result<TokenKind, LexError> {
    let start = cur.pos;
    while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
    }
    let mut is_real = false;
    if cur.peek() == Some('.') {
        is_real = true;
        cur.bump();
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    }
    let text = &cur.src[start..cur.pos];
    if is_real {
        // "5." and ".5" are both valid reals; f64 parsing wants a digit on each side.
        let normalized = format!(
            "{}{}{}",
            if text.starts_with('.') { "0" } else { "" },
            text,
            if text.ends_with('.') { "0" } else { "" }
        );
        normalized
            .parse::<f64>()
            .map(TokenKind::RealLit)
            .map_err(|e| LexError { span: cur.span_from(mark), message: format!("bad real literal {text:?}: {e}") })
    } else {
        let n = text.parse::<BigUint>().map_err(|e| LexError {
            span: cur.span_from(mark),
            message: format!("bad integer literal {text:?}: {e}"),
        })?;
        Ok(TokenKind::IntegerLit(n))
    }
}

fn lex_string(cur: &mut Cursor<'_>, mark: (usize, u32, u32)) -> Result<TokenKind, LexError> {
    cur.bump();
    let mut out = String::new();
    loop {
        match cur.bump() {
            Some('"') => return Ok(TokenKind::StringLit(out)),
            Some('\\') => match cur.bump() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some('r') => out.push('\r'),
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some(other) => {
                    out.push('\\');
                    out.push(other);
                }
                None => break,
            },
            Some(c) => out.push(c),
            None => break,
        }
    }
    Err(LexError { span: cur.span_from(mark), message: "unterminated string literal".into() })
}

fn lex_punct(cur: &mut Cursor<'_>, mark: (usize, u32, u32)) -> Result<TokenKind, LexError> {
    let c = cur.bump().expect("caller peeked a character");
    let next = cur.peek();
    let two = |kind: TokenKind, cur: &mut Cursor<'_>| {
        cur.bump();
        Ok(kind)
    };
    use TokenKind::{CloseDelim as Close, OpenDelim as Open, Operator as O};
    match (c, next) {
        (':', Some('=')) => two(O(Op::SetDelayed), cur),
        ('=', Some('=')) => two(O(Op::Equal), cur),
        ('!', Some('=')) => two(O(Op::Unequal), cur),
        ('<', Some('=')) => two(O(Op::LessEqual), cur),
        ('>', Some('=')) => two(O(Op::GreaterEqual), cur),
        ('<', Some('|')) => two(Open(Delim::Assoc), cur),
        ('|', Some('>')) => two(Close(Delim::Assoc), cur),
        ('|', Some('|')) => two(O(Op::Or), cur),
        ('&', Some('&')) => two(O(Op::And), cur),
        ('-', Some('>')) => two(O(Op::Rule), cur),
        ('=', _) => Ok(O(Op::Set)),
        ('!', _) => Ok(O(Op::Not)),
        ('<', _) => Ok(O(Op::Less)),
        ('>', _) => Ok(O(Op::Greater)),
        ('+', _) => Ok(O(Op::Plus)),
        ('-', _) => Ok(O(Op::Minus)),
        ('*', _) => Ok(O(Op::Times)),
        ('/', _) => Ok(O(Op::Divide)),
        ('^', _) => Ok(O(Op::Power)),
        ('&', _) => Ok(O(Op::Amp)),
        (';', _) => Ok(O(Op::Semi)),
        (',', _) => Ok(O(Op::Comma)),
        ('(', _) => Ok(Open(Delim::Paren)),
        (')', _) => Ok(Close(Delim::Paren)),
        ('[', _) => Ok(Open(Delim::Bracket)),
        (']', _) => Ok(Close(Delim::Bracket)),
        ('{', _) => Ok(Open(Delim::Brace)),
        ('}', _) => Ok(Close(Delim::Brace)),
        _ => Err(LexError { span: cur.span_from(mark), message: format!("illegal character {c:?}") }),
    }
}
