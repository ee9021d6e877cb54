use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::env::Binding;
use super::number::Number;
use crate::lang::{format_expr, format_real, write_string_literal, Expr};

/// Heads whose applications are symbolic arithmetic rather than data.
pub(crate) const SYMBOLIC_HEADS: &[&str] = &[
    "Plus",
    "Subtract",
    "Times",
    "Divide",
    "Minus",
    "Power",
    "Sqrt",
    "Abs",
    "Floor",
    "Ceiling",
    "Round",
    "Mod",
    "Max",
    "Min",
    "Equal",
    "Unequal",
    "Less",
    "LessEqual",
    "Greater",
    "GreaterEqual",
    "N",
];

/// Result of evaluating a program.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(BigInt),
    /// Always normalized with denominator > 1; see [`Value::from_rational`].
    Rat(BigRational),
    Real(f64),
    Bool(bool),
    Str(String),
    Sym(String),
    List(Vec<Value>),
    Assoc(Association),
    /// Unevaluated application: geometric primitives, `Missing[...]`,
    /// `Rule`, and symbolic arithmetic residue.
    Inert(String, Vec<Value>),
    Fn(Arc<Closure>),
    Null,
}

/// Pure function plus the local bindings its body referenced at creation.
#[derive(Clone, Debug, PartialEq)]
pub struct Closure {
    pub body: Expr,
    pub captured: Vec<(String, Binding)>,
}

/// Insertion-ordered map with unique keys.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Association {
    entries: Vec<(Value, Value)>,
}

impl Association {
    pub fn new() -> Self {
        Self::default()
    }

    /// Overwrites an existing key in place, otherwise appends.
    pub fn insert(&mut self, key: Value, value: Value) {
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn get(&self, key: &Value) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Value, &Value)> {
        self.entries.iter().map(|(k, v)| (k, v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &Value> {
        self.entries.iter().map(|(k, _)| k)
    }

    pub fn values(&self) -> impl Iterator<Item = &Value> {
        self.entries.iter().map(|(_, v)| v)
    }
}

impl FromIterator<(Value, Value)> for Association {
    fn from_iter<I: IntoIterator<Item = (Value, Value)>>(iter: I) -> Self {
        let mut assoc = Association::new();
        for (k, v) in iter {
            assoc.insert(k, v);
        }
        assoc
    }
}

impl Value {
    pub fn int(n: impl Into<BigInt>) -> Value {
        Value::Int(n.into())
    }

    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    pub fn sym(s: impl Into<String>) -> Value {
        Value::Sym(s.into())
    }

    pub fn inert(head: impl Into<String>, args: Vec<Value>) -> Value {
        Value::Inert(head.into(), args)
    }

    /// Canonical exact value: integral rationals collapse to `Int`.
    pub fn from_rational(q: BigRational) -> Value {
        if q.denom().is_one() {
            Value::Int(q.numer().clone())
        } else {
            Value::Rat(q)
        }
    }

    pub fn rational(num: i64, den: i64) -> Value {
        Value::from_rational(BigRational::new(num.into(), den.into()))
    }

    pub fn from_number(n: Number) -> Value {
        match n {
            Number::Exact(q) => Value::from_rational(q),
            Number::Real(x) => Value::Real(x),
        }
    }

    pub fn as_number(&self) -> Option<Number> {
        match self {
            Value::Int(n) => Some(Number::Exact(BigRational::from_integer(n.clone()))),
            Value::Rat(q) => Some(Number::Exact(q.clone())),
            Value::Real(x) => Some(Number::Real(*x)),
            _ => None,
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Value::Int(_) | Value::Rat(_) | Value::Real(_))
    }

    pub fn is_exact_number(&self) -> bool {
        matches!(self, Value::Int(_) | Value::Rat(_))
    }

    /// Symbols and unevaluated arithmetic over them.
    pub fn is_symbolic(&self) -> bool {
        match self {
            Value::Sym(_) => true,
            Value::Inert(head, _) => SYMBOLIC_HEADS.contains(&head.as_str()),
            _ => false,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Rat(_) => "rational",
            Value::Real(_) => "real",
            Value::Bool(_) => "boolean",
            Value::Str(_) => "string",
            Value::Sym(_) => "symbol",
            Value::List(_) => "list",
            Value::Assoc(_) => "association",
            Value::Inert(..) => "expression",
            Value::Fn(_) => "function",
            Value::Null => "Null",
        }
    }

    /// First symbol or function found anywhere inside the value.
    pub fn find_non_ground(&self) -> Option<&Value> {
        match self {
            Value::Sym(_) | Value::Fn(_) => Some(self),
            Value::List(items) | Value::Inert(_, items) => items.iter().find_map(Value::find_non_ground),
            Value::Assoc(assoc) => assoc.iter().find_map(|(k, v)| k.find_non_ground().or_else(|| v.find_non_ground())),
            _ => None,
        }
    }

    /// True when the value holds no symbol and no function.
    pub fn is_ground(&self) -> bool {
        self.find_non_ground().is_none()
    }

    /// True when a binary64 number occurs anywhere inside.
    pub fn contains_real(&self) -> bool {
        match self {
            Value::Real(_) => true,
            Value::List(items) | Value::Inert(_, items) => items.iter().any(Value::contains_real),
            Value::Assoc(assoc) => assoc.iter().any(|(k, v)| k.contains_real() || v.contains_real()),
            _ => false,
        }
    }
}

impl From<Number> for Value {
    fn from(n: Number) -> Self {
        Value::from_number(n)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

// Rendering ------------------------------------------------------------------

const PREC_PLUS: u8 = 1;
const PREC_TIMES: u8 = 2;
const PREC_POWER: u8 = 3;
const PREC_ATOM: u8 = 4;

fn render_prec(v: &Value) -> u8 {
    match v {
        Value::Int(n) if n.is_negative() => PREC_PLUS,
        Value::Rat(_) => PREC_TIMES,
        Value::Real(x) if *x < 0.0 => PREC_PLUS,
        Value::Inert(head, args) => match (head.as_str(), args.len()) {
            ("Plus", n) if n >= 2 => PREC_PLUS,
            ("Times", n) if n >= 2 => PREC_TIMES,
            ("Power", 2) => PREC_POWER,
            _ => PREC_ATOM,
        },
        _ => PREC_ATOM,
    }
}

fn render_with_parens(v: &Value, min: u8, out: &mut String) {
    if render_prec(v) < min {
        out.push('(');
        render(v, out);
        out.push(')');
    } else {
        render(v, out);
    }
}

/// Magnitude of a term with a negative leading coefficient, for `a - b` rendering.
fn negated_term(v: &Value) -> Option<Value> {
    match v {
        Value::Int(n) if n.is_negative() => Some(Value::Int(-n)),
        Value::Rat(q) if q.is_negative() => Some(Value::Rat(-q)),
        Value::Real(x) if *x < 0.0 => Some(Value::Real(-x)),
        Value::Inert(head, args) if head == "Times" && !args.is_empty() => {
            let lead = negated_term(&args[0])?;
            let mut rest = args.clone();
            if matches!(&lead, Value::Int(n) if n.is_one()) {
                rest.remove(0);
            } else {
                rest[0] = lead;
            }
            Some(if rest.len() == 1 { rest.pop().unwrap() } else { Value::Inert("Times".into(), rest) })
        }
        _ => None,
    }
}

fn render_seq(items: &[Value], out: &mut String) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        render(item, out);
    }
}

fn render(v: &Value, out: &mut String) {
    match v {
        Value::Int(n) => out.push_str(&n.to_string()),
        Value::Rat(q) => {
            out.push_str(&q.numer().to_string());
            out.push('/');
            out.push_str(&q.denom().to_string());
        }
        Value::Real(x) => out.push_str(&format_real(*x)),
        Value::Bool(true) => out.push_str("True"),
        Value::Bool(false) => out.push_str("False"),
        Value::Str(s) => write_string_literal(s, out),
        Value::Sym(name) => out.push_str(name),
        Value::Null => out.push_str("Null"),
        Value::List(items) => {
            out.push('{');
            render_seq(items, out);
            out.push('}');
        }
        Value::Assoc(assoc) => {
            out.push_str("<|");
            for (i, (k, val)) in assoc.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render(k, out);
                out.push_str(" -> ");
                render(val, out);
            }
            out.push_str("|>");
        }
        Value::Fn(closure) => out.push_str(&format_expr(&Expr::pure_fn(closure.body.clone()))),
        Value::Inert(head, args) => match (head.as_str(), args.len()) {
            ("Plus", n) if n >= 2 => {
                render_with_parens(&args[0], PREC_PLUS, out);
                for term in &args[1..] {
                    match negated_term(term) {
                        Some(magnitude) => {
                            out.push_str(" - ");
                            render_with_parens(&magnitude, PREC_TIMES, out);
                        }
                        None => {
                            out.push_str(" + ");
                            render_with_parens(term, PREC_TIMES, out);
                        }
                    }
                }
            }
            ("Times", n) if n >= 2 => {
                let mut factors = args.as_slice();
                if matches!(&factors[0], Value::Int(m) if *m == BigInt::from(-1)) {
                    out.push('-');
                    factors = &factors[1..];
                }
                for (i, f) in factors.iter().enumerate() {
                    if i > 0 {
                        out.push('*');
                    }
                    render_with_parens(f, PREC_POWER, out);
                }
            }
            ("Power", 2) => {
                render_with_parens(&args[0], PREC_ATOM, out);
                out.push('^');
                render_with_parens(&args[1], PREC_ATOM, out);
            }
            _ => {
                out.push_str(head);
                out.push('[');
                render_seq(args, out);
                out.push(']');
            }
        },
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        render(self, &mut out);
        f.write_str(&out)
    }
}
