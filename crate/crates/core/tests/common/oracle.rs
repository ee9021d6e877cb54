//! Direct recursive evaluator over i128 fractions, independent of the
//! engine's number tower, scopes and limits.

use neurosym::engine::Value;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

/// Reduced fraction with positive denominator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Q(pub i128, pub i128);

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Q {
    fn new(n: i128, d: i128) -> Q {
        let g = gcd(n, d).max(1) * d.signum();
        Q(n / g, d / g)
    }

    fn add(self, o: Q) -> Option<Q> {
        Some(Q::new(self.0.checked_mul(o.1)?.checked_add(o.0.checked_mul(self.1)?)?, self.1.checked_mul(o.1)?))
    }

    fn mul(self, o: Q) -> Option<Q> {
        Some(Q::new(self.0.checked_mul(o.0)?, self.1.checked_mul(o.1)?))
    }

    pub fn to_value(self) -> Value {
        if self.1 == 1 {
            Value::Int(BigInt::from(self.0))
        } else {
            Value::Rat(BigRational::new(self.0.into(), self.1.into()))
        }
    }
}

#[derive(Clone, Debug)]
pub enum Arith {
    Lit(i64),
    Add(Box<Arith>, Box<Arith>),
    Sub(Box<Arith>, Box<Arith>),
    Mul(Box<Arith>, Box<Arith>),
    Div(Box<Arith>, Box<Arith>),
    Neg(Box<Arith>),
    Pow(Box<Arith>, u32),
    Length(Vec<Arith>),
    Total(Vec<Arith>),
    Count(Vec<Arith>, Box<Arith>),
}

#[derive(Debug, PartialEq)]
pub enum Oracle {
    Value(Q),
    DivByZero,
    /// Outside i128 or otherwise out of scope; the case is skipped.
    Overflow,
}

fn list_source(items: &[Arith]) -> String {
    let parts: Vec<String> = items.iter().map(Arith::source).collect();
    format!("{{{}}}", parts.join(", "))
}

/// Values of all items, or the first failure in evaluation order.
fn all_values(items: &[Arith]) -> Result<Vec<Q>, Oracle> {
    items
        .iter()
        .map(|i| match i.oracle() {
            Oracle::Value(q) => Ok(q),
            other => Err(other),
        })
        .collect()
}

impl Arith {
    pub fn source(&self) -> String {
        match self {
            Arith::Lit(n) => n.to_string(),
            Arith::Add(a, b) => format!("({} + {})", a.source(), b.source()),
            Arith::Sub(a, b) => format!("({} - {})", a.source(), b.source()),
            Arith::Mul(a, b) => format!("({} * {})", a.source(), b.source()),
            Arith::Div(a, b) => format!("({} / {})", a.source(), b.source()),
            Arith::Neg(a) => format!("(-{})", a.source()),
            Arith::Pow(a, k) => format!("({})^{k}", a.source()),
            Arith::Length(items) => format!("Length[{}]", list_source(items)),
            Arith::Total(items) => format!("Total[{}]", list_source(items)),
            Arith::Count(items, x) => format!("Count[{}, {}]", list_source(items), x.source()),
        }
    }

    pub fn oracle(&self) -> Oracle {
        use Oracle::*;
        let bin = |a: &Arith, b: &Arith, f: &dyn Fn(Q, Q) -> Oracle| match (a.oracle(), b.oracle()) {
            (Value(x), Value(y)) => f(x, y),
            (DivByZero, _) | (Value(_), DivByZero) => DivByZero,
            _ => Overflow,
        };
        let lift = |q: Option<Q>| q.map_or(Overflow, Value);
        match self {
            Arith::Lit(n) => Value(Q(*n as i128, 1)),
            Arith::Add(a, b) => bin(a, b, &|x, y| lift(x.add(y))),
            Arith::Sub(a, b) => bin(a, b, &|x, y| lift(x.add(Q(-y.0, y.1)))),
            Arith::Mul(a, b) => bin(a, b, &|x, y| lift(x.mul(y))),
            Arith::Div(a, b) => bin(a, b, &|x, y| if y.0 == 0 { DivByZero } else { lift(x.mul(Q::new(y.1, y.0))) }),
            Arith::Neg(a) => match a.oracle() {
                Value(x) => Value(Q(-x.0, x.1)),
                other => other,
            },
            Arith::Pow(a, k) => match a.oracle() {
                // The engine rejects 0^0; treat it as out of scope.
                Value(Q(0, _)) if *k == 0 => Overflow,
                Value(x) => (0..*k).try_fold(Q(1, 1), |acc, _| acc.mul(x)).map_or(Overflow, Value),
                other => other,
            },
            Arith::Length(items) => match all_values(items) {
                Ok(v) => Value(Q(v.len() as i128, 1)),
                Err(e) => e,
            },
            Arith::Total(items) => match all_values(items) {
                Ok(v) => v.into_iter().try_fold(Q(0, 1), Q::add).map_or(Overflow, Value),
                Err(e) => e,
            },
            Arith::Count(items, x) => match (all_values(items), x.oracle()) {
                (Ok(v), Value(target)) => Value(Q(v.iter().filter(|q| **q == target).count() as i128, 1)),
                (Err(e), _) => e,
                (Ok(_), other) => other,
            },
        }
    }
}

pub fn arb_arith() -> impl Strategy<Value = Arith> {
    (-20i64..=20).prop_map(Arith::Lit).prop_recursive(4, 32, 3, |inner| {
        let list = prop::collection::vec(inner.clone(), 0..4);
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Arith::Add(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Arith::Sub(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Arith::Mul(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Arith::Div(a.into(), b.into())),
            inner.clone().prop_map(|a| Arith::Neg(a.into())),
            (inner.clone(), 0u32..4).prop_map(|(a, k)| Arith::Pow(a.into(), k)),
            list.clone().prop_map(Arith::Length),
            list.clone().prop_map(Arith::Total),
            (list, inner).prop_map(|(l, x)| Arith::Count(l, x.into())),
        ]
    })
}
