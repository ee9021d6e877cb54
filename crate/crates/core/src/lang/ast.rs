use std::fmt;

use num_bigint::BigInt;

/// Byte range plus the 1-based line/column of its first character.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize, line: u32, column: u32) -> Self {
        debug_assert!(start <= end);
        Self { start, end, line: line.max(1), column: column.max(1) }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: SourceSpan) -> SourceSpan {
        if other.end >= self.end {
            SourceSpan { end: other.end, ..self }
        } else {
            self
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Syntax tree of a mini-language program.
///
/// Infix operators are normalized to [`Expr::Apply`] with a canonical head
/// symbol (`a + b` is `Plus[a, b]`), so `1 + 2` and `Plus[1, 2]` parse to the
/// same tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Integer(BigInt),
    Real(f64),
    Str(String),
    Sym(String),
    Slot(u32),
    List(Vec<Expr>),
    /// `<| k -> v, ... |>`; every entry is a `Rule[k, v]` application.
    Assoc(Vec<Expr>),
    Apply(Box<Expr>, Vec<Expr>),
    PureFn(Box<Expr>),
}

impl Expr {
    pub fn sym(name: impl Into<String>) -> Expr {
        Expr::Sym(name.into())
    }

    pub fn int(n: impl Into<BigInt>) -> Expr {
        Expr::Integer(n.into())
    }

    pub fn apply(head: impl Into<String>, args: Vec<Expr>) -> Expr {
        Expr::Apply(Box::new(Expr::Sym(head.into())), args)
    }

    pub fn pure_fn(body: Expr) -> Expr {
        Expr::PureFn(Box::new(body))
    }

    /// Head symbol name when this is an application of a plain symbol.
    pub fn head_name(&self) -> Option<&str> {
        match self {
            Expr::Apply(head, _) => match head.as_ref() {
                Expr::Sym(name) => Some(name),
                _ => None,
            },
            _ => None,
        }
    }

    /// Arguments of an application of `name`, if this is one.
    pub fn args_of(&self, name: &str) -> Option<&[Expr]> {
        match self {
            Expr::Apply(_, args) if self.head_name() == Some(name) => Some(args),
            _ => None,
        }
    }

    pub fn is_sym(&self, name: &str) -> bool {
        matches!(self, Expr::Sym(s) if s == name)
    }

    /// Visits every symbol name occurring in the tree, heads included.
    pub fn for_each_symbol<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Sym(name) => f(name),
            Expr::Integer(_) | Expr::Real(_) | Expr::Str(_) | Expr::Slot(_) => {}
            Expr::List(items) | Expr::Assoc(items) => {
                for item in items {
                    item.for_each_symbol(f);
                }
            }
            Expr::Apply(head, args) => {
                head.for_each_symbol(f);
                for arg in args {
                    arg.for_each_symbol(f);
                }
            }
            Expr::PureFn(body) => body.for_each_symbol(f),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::printer::format_expr(self))
    }
}
