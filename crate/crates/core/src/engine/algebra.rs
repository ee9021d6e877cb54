//! Polynomial normal form, `Simplify` and `Solve`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::error::EvalError;
#[cfg(test)]
use super::error::EvalErrorKind;
use super::number::Number;
use super::value::{Association, Value};

/// Largest exponent expanded symbolically.
const MAX_EXPANDED_POWER: u32 = 64;

/// Variable name to positive exponent.
type Monomial = BTreeMap<String, u32>;

/// Sparse multivariate polynomial. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct Poly {
    terms: BTreeMap<Monomial, Number>,
}

fn non_polynomial(head: &str, what: &Value) -> EvalError {
    EvalError::unknown(head, format!("`{what}` is not a polynomial with numeric coefficients"))
}

impl Poly {
    fn constant(n: Number) -> Poly {
        let mut p = Poly::default();
        if !n.is_zero() {
            p.terms.insert(Monomial::new(), n);
        }
        p
    }

    fn var(name: &str) -> Poly {
        let mut p = Poly::default();
        p.terms.insert(Monomial::from([(name.to_string(), 1)]), Number::int(1));
        p
    }

    pub(crate) fn from_value(v: &Value, head: &str) -> Result<Poly, EvalError> {
        if let Some(n) = v.as_number() {
            return Ok(Poly::constant(n));
        }
        match v {
            Value::Sym(name) => Ok(Poly::var(name)),
            Value::Inert(h, args) if h == "Plus" => {
                args.iter().try_fold(Poly::default(), |acc, a| acc.add(&Poly::from_value(a, head)?))
            }
            Value::Inert(h, args) if h == "Times" => {
                args.iter().try_fold(Poly::constant(Number::int(1)), |acc, a| acc.mul(&Poly::from_value(a, head)?))
            }
            Value::Inert(h, args) if h == "Power" && args.len() == 2 => {
                let exp = match &args[1] {
                    Value::Int(n) => u32::try_from(n).ok().filter(|e| *e <= MAX_EXPANDED_POWER),
                    _ => None,
                };
                let Some(exp) = exp else {
                    return Err(non_polynomial(head, v));
                };
                Poly::from_value(&args[0], head)?.pow(exp)
            }
            _ => Err(non_polynomial(head, v)),
        }
    }

    fn add(&self, other: &Poly) -> Result<Poly, EvalError> {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            let sum = match out.terms.get(m) {
                Some(existing) => existing.add(c)?,
                None => c.clone(),
            };
            if sum.is_zero() {
                out.terms.remove(m);
            } else {
                out.terms.insert(m.clone(), sum);
            }
        }
        Ok(out)
    }

    fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect() }
    }

    fn sub(&self, other: &Poly) -> Result<Poly, EvalError> {
        self.add(&other.neg())
    }

    fn mul(&self, other: &Poly) -> Result<Poly, EvalError> {
        let mut out = Poly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m = m1.clone();
                for (v, e) in m2 {
                    *m.entry(v.clone()).or_insert(0) += e;
                }
                let mut term = Poly::default();
                let c = c1.mul(c2)?;
                if !c.is_zero() {
                    term.terms.insert(m, c);
                }
                out = out.add(&term)?;
            }
        }
        Ok(out)
    }

    fn pow(&self, exp: u32) -> Result<Poly, EvalError> {
        let mut out = Poly::constant(Number::int(1));
        for _ in 0..exp {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    fn as_constant(&self) -> Option<Number> {
        match self.terms.len() {
            0 => Some(Number::int(0)),
            1 => self.terms.get(&Monomial::new()).cloned(),
            _ => None,
        }
    }

    fn variables(&self) -> Vec<&str> {
        let mut vars: Vec<&str> = self.terms.keys().flat_map(|m| m.keys().map(String::as_str)).collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    fn total_degree(m: &Monomial) -> u32 {
        m.values().sum()
    }

    fn degree(&self) -> u32 {
        self.terms.keys().map(Poly::total_degree).max().unwrap_or(0)
    }

    /// Coefficient of `var^k` in a polynomial whose only variable is `var`.
    fn coeff(&self, var: &str, k: u32) -> Number {
        let m = if k == 0 { Monomial::new() } else { Monomial::from([(var.to_string(), k)]) };
        self.terms.get(&m).cloned().unwrap_or_else(|| Number::int(0))
    }

    /// Value at a full assignment of the polynomial's variables.
    fn eval_at(&self, assignment: &[(String, Number)]) -> Result<Option<Number>, EvalError> {
        let mut total = Number::int(0);
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (v, e) in m {
                let Some((_, x)) = assignment.iter().find(|(n, _)| n == v) else {
                    return Ok(None);
                };
                term = term.mul(&x.pow(&Number::int(*e))?)?;
            }
            total = total.add(&term)?;
        }
        Ok(Some(total))
    }

    /// Canonical value: terms by descending total degree, ties broken by
    /// lexicographic variable order (higher power of the earlier name first).
    pub(crate) fn to_value(&self) -> Value {
        let mut terms: Vec<(&Monomial, &Number)> = self.terms.iter().collect();
        terms.sort_by(|(a, _), (b, _)| monomial_order(a, b));
        let mut rendered: Vec<Value> = terms.into_iter().map(|(m, c)| term_value(m, c)).collect();
        match rendered.len() {
            0 => Value::int(0),
            1 => rendered.pop().unwrap(),
            _ => Value::inert("Plus", rendered),
        }
    }
}

fn monomial_order(a: &Monomial, b: &Monomial) -> Ordering {
    let by_degree = Poly::total_degree(b).cmp(&Poly::total_degree(a));
    if by_degree != Ordering::Equal {
        return by_degree;
    }
    let mut vars: Vec<&String> = a.keys().chain(b.keys()).collect();
    vars.sort_unstable();
    vars.dedup();
    for v in vars {
        let (ea, eb) = (a.get(v).copied().unwrap_or(0), b.get(v).copied().unwrap_or(0));
        if ea != eb {
            return eb.cmp(&ea);
        }
    }
    Ordering::Equal
}

fn term_value(m: &Monomial, c: &Number) -> Value {
    let mut factors: Vec<Value> = m
        .iter()
        .map(|(v, e)| match e {
            1 => Value::sym(v.clone()),
            _ => Value::inert("Power", vec![Value::sym(v.clone()), Value::int(*e)]),
        })
        .collect();
    if factors.is_empty() {
        return Value::from(c.clone());
    }
    if !(c.is_exact() && c.is_one()) {
        factors.insert(0, Value::from(c.clone()));
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Value::inert("Times", factors)
    }
}

/// Canonical form of a number, polynomial, equation, or list of those.
pub fn simplify(v: &Value) -> Result<Value, EvalError> {
    match v {
        Value::List(items) => items.iter().map(simplify).collect::<Result<_, _>>().map(Value::List),
        Value::Bool(_) | Value::Str(_) | Value::Null => Ok(v.clone()),
        Value::Inert(head, args) if head == "Equal" && args.len() == 2 => {
            let (l, r) = (Poly::from_value(&args[0], "Simplify")?, Poly::from_value(&args[1], "Simplify")?);
            let diff = l.sub(&r)?;
            match diff.as_constant() {
                Some(c) => Ok(Value::Bool(c.is_zero())),
                None => Ok(Value::inert("Equal", vec![l.to_value(), r.to_value()])),
            }
        }
        _ => Poly::from_value(v, "Simplify").map(|p| p.to_value()),
    }
}

fn underdetermined(what: &str) -> EvalError {
    EvalError::unknown("Solve", format!("{what} does not determine a unique finite solution set"))
}

/// Solves equations of the supported shapes: one unknown of degree at most
/// two, or two unknowns with two linear equations.
pub fn solve(equations: &Value, unknowns: &Value) -> Result<Value, EvalError> {
    let vars: Vec<String> = match unknowns {
        Value::Sym(s) => vec![s.clone()],
        Value::List(items) => items
            .iter()
            .map(|v| match v {
                Value::Sym(s) => Ok(s.clone()),
                other => Err(EvalError::arg_type("Solve", format!("`{other}` is not a symbol"))),
            })
            .collect::<Result<_, _>>()?,
        other => return Err(EvalError::arg_type("Solve", format!("`{other}` is not a symbol or list of symbols"))),
    };
    if vars.is_empty() || vars.len() > 2 {
        return Err(EvalError::unknown("Solve", format!("{} unknowns are not supported", vars.len())));
    }
    let eqs: &[Value] = match equations {
        Value::List(items) => items,
        single => std::slice::from_ref(single),
    };
    let mut polys = Vec::new();
    for eq in eqs {
        match eq {
            // Already decided by evaluation, e.g. `x == x` became True.
            Value::Bool(true) => {}
            Value::Bool(false) => return Ok(Value::List(vec![])),
            Value::Inert(head, sides) if head == "Equal" && sides.len() == 2 => {
                let p = Poly::from_value(&sides[0], "Solve")?.sub(&Poly::from_value(&sides[1], "Solve")?)?;
                if let Some(free) = p.variables().into_iter().find(|v| !vars.iter().any(|u| u == v)) {
                    return Err(EvalError::unknown("Solve", format!("symbol `{free}` is not among the unknowns")));
                }
                match p.as_constant() {
                    Some(c) if c.is_zero() => {}
                    Some(_) => return Ok(Value::List(vec![])),
                    None => polys.push(p),
                }
            }
            other => return Err(EvalError::arg_type("Solve", format!("`{other}` is not an equation"))),
        }
    }
    if polys.is_empty() {
        return Err(underdetermined("an identity"));
    }
    let solutions = match vars.as_slice() {
        [x] => solve_univariate(&polys, x)?,
        [x, y] => solve_linear_pair(&polys, x, y)?,
        _ => unreachable!(),
    };
    Ok(Value::List(
        solutions
            .into_iter()
            .map(|assignment| {
                Value::Assoc(
                    assignment.into_iter().map(|(name, n)| (Value::Sym(name), Value::from(n))).collect::<Association>(),
                )
            })
            .collect(),
    ))
}

type Assignment = Vec<(String, Number)>;

fn solve_univariate(polys: &[Poly], x: &str) -> Result<Vec<Assignment>, EvalError> {
    let p = &polys[0];
    let roots = match p.degree() {
        1 => vec![p.coeff(x, 0).neg().div(&p.coeff(x, 1))?],
        2 => quadratic_roots(&p.coeff(x, 2), &p.coeff(x, 1), &p.coeff(x, 0))?,
        d => return Err(EvalError::unknown("Solve", format!("degree {d} equations are not supported"))),
    };
    let mut out = Vec::new();
    for r in roots {
        let assignment = vec![(x.to_string(), r)];
        if satisfies_all(&polys[1..], &assignment)? {
            out.push(assignment);
        }
    }
    Ok(out)
}

/// Real roots of a*x^2 + b*x + c (a nonzero), ascending; a double root once.
fn quadratic_roots(a: &Number, b: &Number, c: &Number) -> Result<Vec<Number>, EvalError> {
    let disc = b.mul(b)?.sub(&Number::int(4).mul(a)?.mul(c)?)?;
    let two_a = Number::int(2).mul(a)?;
    if disc.is_negative() {
        return Ok(vec![]);
    }
    if disc.is_zero() {
        return Ok(vec![b.neg().div(&two_a)?]);
    }
    let s = disc.sqrt()?;
    let mut roots = vec![b.neg().sub(&s)?.div(&two_a)?, b.neg().add(&s)?.div(&two_a)?];
    roots.sort_by(Number::compare);
    Ok(roots)
}

fn satisfies_all(polys: &[Poly], assignment: &Assignment) -> Result<bool, EvalError> {
    for p in polys {
        match p.eval_at(assignment)? {
            Some(v) if v.num_eq(&Number::int(0)) => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

fn solve_linear_pair(polys: &[Poly], x: &str, y: &str) -> Result<Vec<Assignment>, EvalError> {
    if polys.iter().any(|p| p.degree() > 1) {
        return Err(EvalError::unknown("Solve", "systems in two unknowns must be linear"));
    }
    let [p, q] = polys else {
        return match polys.len() {
            1 => Err(underdetermined("one equation in two unknowns")),
            n => Err(EvalError::unknown("Solve", format!("systems of {n} equations are not supported"))),
        };
    };
    let row = |p: &Poly| {
        let m = |v: &str| p.terms.get(&Monomial::from([(v.to_string(), 1)])).cloned().unwrap_or_else(|| Number::int(0));
        (m(x), m(y), p.coeff(x, 0).neg())
    };
    let (a1, b1, c1) = row(p);
    let (a2, b2, c2) = row(q);
    let det = a1.mul(&b2)?.sub(&a2.mul(&b1)?)?;
    if det.is_zero() {
        let minor_x = a1.mul(&c2)?.sub(&a2.mul(&c1)?)?;
        let minor_y = b1.mul(&c2)?.sub(&b2.mul(&c1)?)?;
        return if minor_x.is_zero() && minor_y.is_zero() {
            Err(underdetermined("a dependent system"))
        } else {
            Ok(vec![])
        };
    }
    let vx = c1.mul(&b2)?.sub(&c2.mul(&b1)?)?.div(&det)?;
    let vy = a1.mul(&c2)?.sub(&a2.mul(&c1)?)?.div(&det)?;
    Ok(vec![vec![(x.to_string(), vx), (y.to_string(), vy)]])
}
