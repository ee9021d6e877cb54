use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::algebra;
use super::error::EvalError;
use super::eval::Evaluator;
use super::number::Number;
use super::value::{Association, Value};

pub(crate) fn call(ev: &mut Evaluator<'_>, name: &str, args: Vec<Value>) -> Result<Value, EvalError> {
    match name {
        "Plus" => thread(name, &args, &mut |a| plus(a.to_vec())),
        "Times" => thread(name, &args, &mut |a| times(a.to_vec())),
        "Subtract" => {
            arity(name, &args, 2)?;
            thread(name, &args, &mut |a| subtract(&a[0], &a[1]))
        }
        "Divide" => {
            arity(name, &args, 2)?;
            thread(name, &args, &mut |a| divide(&a[0], &a[1]))
        }
        "Power" => {
            arity(name, &args, 2)?;
            thread(name, &args, &mut |a| power(&a[0], &a[1]))
        }
        "Minus" => {
            arity(name, &args, 1)?;
            thread(name, &args, &mut |a| times(vec![Value::int(-1), a[0].clone()]))
        }
        "Abs" | "Sqrt" | "Floor" | "Ceiling" | "Round" => {
            arity(name, &args, 1)?;
            thread(name, &args, &mut |a| unary_numeric(name, &a[0]))
        }
        "Mod" => {
            arity(name, &args, 2)?;
            thread(name, &args, &mut |a| match (a[0].as_number(), a[1].as_number()) {
                (Some(x), Some(y)) => x.modulo(&y).map(Value::from),
                _ if a.iter().all(|v| v.is_number() || v.is_symbolic()) => Ok(Value::inert(name, a.to_vec())),
                _ => Err(EvalError::arg_type(name, "Mod needs numeric arguments")),
            })
        }
        "GCD" | "LCM" => thread(name, &args, &mut |a| gcd_lcm(name, a)),
        "Max" | "Min" => extremum(name, args),
        "N" => {
            arity(name, &args, 1)?;
            Ok(numericize(&args[0]))
        }
        "Total" => {
            arity(name, &args, 1)?;
            plus(elements(name, &args[0])?)
        }
        "Mean" => {
            arity(name, &args, 1)?;
            let items = elements(name, &args[0])?;
            if items.is_empty() {
                return Err(EvalError::arg_count(name, "Mean of an empty list"));
            }
            let n = Value::int(items.len());
            divide(&plus(items)?, &n)
        }
        "Length" => {
            arity(name, &args, 1)?;
            Ok(Value::int(match &args[0] {
                Value::List(items) | Value::Inert(_, items) => items.len(),
                Value::Assoc(a) => a.len(),
                _ => 0,
            }))
        }
        "Count" => {
            arity(name, &args, 2)?;
            let items = elements(name, &args[0])?;
            Ok(Value::int(items.iter().filter(|v| **v == args[1]).count()))
        }
        "First" | "Last" => {
            arity(name, &args, 1)?;
            let items = elements(name, &args[0])?;
            let pick = if name == "First" { items.first() } else { items.last() };
            pick.cloned().ok_or_else(|| EvalError::arg_type(name, format!("`{}` has no elements", args[0])))
        }
        "Select" => {
            arity(name, &args, 2)?;
            let mut kept = Vec::new();
            for item in elements(name, &args[0])? {
                if ev.apply(&args[1], vec![item.clone()])? == Value::Bool(true) {
                    kept.push(item);
                }
            }
            Ok(Value::List(kept))
        }
        "SelectFirst" => {
            if !(2..=3).contains(&args.len()) {
                return Err(EvalError::arg_count(
                    name,
                    format!("SelectFirst takes 2 or 3 arguments, got {}", args.len()),
                ));
            }
            for item in elements(name, &args[0])? {
                if ev.apply(&args[1], vec![item.clone()])? == Value::Bool(true) {
                    return Ok(item);
                }
            }
            Ok(args.get(2).cloned().unwrap_or_else(|| Value::inert("Missing", vec![Value::str("NotFound")])))
        }
        "Map" => {
            arity(name, &args, 2)?;
            match &args[1] {
                Value::List(items) => items
                    .iter()
                    .map(|item| ev.apply(&args[0], vec![item.clone()]))
                    .collect::<Result<_, _>>()
                    .map(Value::List),
                Value::Assoc(assoc) => {
                    let mut out = Association::new();
                    for (k, v) in assoc.iter() {
                        out.insert(k.clone(), ev.apply(&args[0], vec![v.clone()])?);
                    }
                    Ok(Value::Assoc(out))
                }
                other => Err(EvalError::arg_type(name, format!("cannot map over {} `{other}`", other.type_name()))),
            }
        }
        "Keys" | "Values" => {
            arity(name, &args, 1)?;
            let pairs = rule_pairs(name, &args[0])?;
            Ok(Value::List(pairs.into_iter().map(|(k, v)| if name == "Keys" { k } else { v }).collect()))
        }
        "Association" => {
            let mut assoc = Association::new();
            for arg in &args {
                for (k, v) in rule_pairs(name, arg)? {
                    assoc.insert(k, v);
                }
            }
            ev.check_list_len(assoc.len())?;
            Ok(Value::Assoc(assoc))
        }
        "Part" => {
            let Some((target, indices)) = args.split_first() else {
                return Err(EvalError::arg_count(name, "Part needs an expression"));
            };
            indices.iter().try_fold(target.clone(), |v, i| part(&v, i))
        }
        "EuclideanDistance" => {
            arity(name, &args, 2)?;
            euclidean_distance(&args[0], &args[1])
        }
        "Equal" => Ok(compare_chain(&args, equal)),
        "Unequal" => Ok(unequal(&args)),
        "Less" | "LessEqual" | "Greater" | "GreaterEqual" => order_chain(name, &args),
        "Not" => {
            arity(name, &args, 1)?;
            match &args[0] {
                Value::Bool(b) => Ok(Value::Bool(!b)),
                other => Err(EvalError::arg_type(name, format!("`{other}` is not a boolean"))),
            }
        }
        "And" | "Or" => {
            let short = name == "Or";
            for arg in &args {
                match arg {
                    Value::Bool(b) if *b == short => return Ok(Value::Bool(short)),
                    Value::Bool(_) => {}
                    other => return Err(EvalError::arg_type(name, format!("`{other}` is not a boolean"))),
                }
            }
            Ok(Value::Bool(!short))
        }
        "Solve" => {
            arity(name, &args, 2)?;
            algebra::solve(&args[0], &args[1])
        }
        "Simplify" => {
            arity(name, &args, 1)?;
            algebra::simplify(&args[0])
        }
        "Rule" => {
            arity(name, &args, 2)?;
            Ok(Value::inert(name, args))
        }
        "List" => {
            ev.check_list_len(args.len())?;
            Ok(Value::List(args))
        }
        "Circle" | "Point" | "Line" | "Polygon" | "Missing" => Ok(Value::inert(name, args)),
        _ => Err(EvalError::unknown(name, format!("no builtin or definition named `{name}`"))),
    }
}

fn arity(name: &str, args: &[Value], n: usize) -> Result<(), EvalError> {
    if args.len() == n {
        Ok(())
    } else {
        Err(EvalError::arg_count(name, format!("{name} takes {n} argument(s), got {}", args.len())))
    }
}

/// Applies `f` elementwise when any argument is a list. All list arguments
/// must have equal length; scalars are broadcast.
fn thread(
    name: &str,
    args: &[Value],
    f: &mut dyn FnMut(&[Value]) -> Result<Value, EvalError>,
) -> Result<Value, EvalError> {
    let mut len = None;
    for arg in args {
        if let Value::List(items) = arg {
            match len {
                None => len = Some(items.len()),
                Some(n) if n != items.len() => {
                    return Err(EvalError::arg_count(
                        name,
                        format!("cannot combine lists of length {n} and {}", items.len()),
                    ));
                }
                Some(_) => {}
            }
        }
    }
    let Some(len) = len else {
        return f(args);
    };
    (0..len)
        .map(|i| {
            let row: Vec<Value> = args
                .iter()
                .map(|a| match a {
                    Value::List(items) => items[i].clone(),
                    scalar => scalar.clone(),
                })
                .collect();
            thread(name, &row, f)
        })
        .collect::<Result<_, _>>()
        .map(Value::List)
}

fn operand_error(name: &str, v: &Value) -> EvalError {
    EvalError::arg_type(name, format!("{} `{v}` is not a numeric operand", v.type_name()))
}

/// Sum of scalars. Numbers fold to one constant; symbolic terms stay inert.
pub(crate) fn plus(args: Vec<Value>) -> Result<Value, EvalError> {
    if args.iter().any(|a| matches!(a, Value::List(_))) {
        return thread("Plus", &args, &mut |a| plus(a.to_vec()));
    }
    let mut constant = Number::int(0);
    let mut terms = Vec::new();
    for arg in args {
        match arg.as_number() {
            Some(n) => constant = constant.add(&n)?,
            None if arg.is_symbolic() => terms.push(arg),
            None => return Err(operand_error("Plus", &arg)),
        }
    }
    if terms.is_empty() {
        return Ok(constant.into());
    }
    if !(constant.is_zero() && constant.is_exact()) {
        terms.insert(0, constant.into());
    }
    Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Value::inert("Plus", terms) })
}

pub(crate) fn times(args: Vec<Value>) -> Result<Value, EvalError> {
    if args.iter().any(|a| matches!(a, Value::List(_))) {
        return thread("Times", &args, &mut |a| times(a.to_vec()));
    }
    let mut constant = Number::int(1);
    let mut factors = Vec::new();
    for arg in args {
        match arg.as_number() {
            Some(n) => constant = constant.mul(&n)?,
            None if arg.is_symbolic() => factors.push(arg),
            None => return Err(operand_error("Times", &arg)),
        }
    }
    if factors.is_empty() || (constant.is_zero() && constant.is_exact()) {
        return Ok(constant.into());
    }
    if !(constant.is_one() && constant.is_exact()) {
        factors.insert(0, constant.into());
    }
    Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Value::inert("Times", factors) })
}

fn subtract(a: &Value, b: &Value) -> Result<Value, EvalError> {
    match (a.as_number(), b.as_number()) {
        (Some(x), Some(y)) => x.sub(&y).map(Value::from),
        _ => plus(vec![a.clone(), times(vec![Value::int(-1), b.clone()]).map_err(|e| e.at("Subtract"))?]),
    }
}

fn divide(a: &Value, b: &Value) -> Result<Value, EvalError> {
    match (a.as_number(), b.as_number()) {
        (Some(x), Some(y)) => x.div(&y).map(Value::from).map_err(|e| e.at("Divide")),
        (_, Some(y)) if a.is_symbolic() => {
            let inv = Number::int(1).div(&y).map_err(|e| e.at("Divide"))?;
            times(vec![inv.into(), a.clone()])
        }
        _ if (a.is_number() || a.is_symbolic()) && b.is_symbolic() => {
            times(vec![a.clone(), Value::inert("Power", vec![b.clone(), Value::int(-1)])])
        }
        _ => Err(operand_error("Divide", if a.is_number() || a.is_symbolic() { b } else { a })),
    }
}

fn power(base: &Value, exp: &Value) -> Result<Value, EvalError> {
    match (base.as_number(), exp.as_number()) {
        (Some(b), Some(e)) => b.pow(&e).map(Value::from),
        (_, Some(e)) if base.is_symbolic() && e.is_exact() && e.is_zero() => Ok(Value::int(1)),
        (_, Some(e)) if base.is_symbolic() && e.is_exact() && e.is_one() => Ok(base.clone()),
        _ if (base.is_number() || base.is_symbolic()) && (exp.is_number() || exp.is_symbolic()) => {
            Ok(Value::inert("Power", vec![base.clone(), exp.clone()]))
        }
        _ => Err(operand_error("Power", if base.is_number() || base.is_symbolic() { exp } else { base })),
    }
}

fn unary_numeric(name: &str, v: &Value) -> Result<Value, EvalError> {
    let Some(n) = v.as_number() else {
        return if v.is_symbolic() { Ok(Value::inert(name, vec![v.clone()])) } else { Err(operand_error(name, v)) };
    };
    match name {
        "Abs" => Ok(n.abs()),
        "Sqrt" => n.sqrt(),
        "Floor" => n.floor(),
        "Ceiling" => n.ceiling(),
        _ => n.round(),
    }
    .map(Value::from)
    .map_err(|e| e.at(name))
}

fn gcd_lcm(name: &str, args: &[Value]) -> Result<Value, EvalError> {
    let mut acc: Option<BigInt> = None;
    for arg in args {
        let Value::Int(n) = arg else {
            return Err(EvalError::arg_type(name, format!("{name} needs integers, got `{arg}`")));
        };
        acc = Some(match acc {
            None => n.abs(),
            Some(a) if name == "GCD" => a.gcd(n),
            Some(a) => a.lcm(n),
        });
    }
    Ok(Value::Int(acc.unwrap_or_else(|| if name == "GCD" { BigInt::zero() } else { BigInt::one() })))
}

fn flatten_into(v: Value, out: &mut Vec<Value>) {
    match v {
        Value::List(items) => items.into_iter().for_each(|i| flatten_into(i, out)),
        other => out.push(other),
    }
}

fn extremum(name: &str, args: Vec<Value>) -> Result<Value, EvalError> {
    let mut flat = Vec::new();
    args.into_iter().for_each(|a| flatten_into(a, &mut flat));
    if flat.is_empty() {
        return Err(EvalError::arg_count(name, format!("{name} of no values")));
    }
    if flat.iter().any(Value::is_symbolic) {
        if let Some(bad) = flat.iter().find(|v| !v.is_number() && !v.is_symbolic()) {
            return Err(operand_error(name, bad));
        }
        return Ok(Value::inert(name, flat));
    }
    let want = if name == "Max" { Ordering::Greater } else { Ordering::Less };
    let mut best: Option<(Number, Value)> = None;
    for v in flat {
        let n = v.as_number().ok_or_else(|| operand_error(name, &v))?;
        if best.as_ref().is_none_or(|(b, _)| n.compare(b) == want) {
            best = Some((n, v));
        }
    }
    Ok(best.unwrap().1)
}

/// Converts every exact number inside to binary64.
fn numericize(v: &Value) -> Value {
    match v {
        Value::Int(_) | Value::Rat(_) => Value::Real(v.as_number().unwrap().to_f64()),
        Value::List(items) => Value::List(items.iter().map(numericize).collect()),
        Value::Assoc(a) => Value::Assoc(a.iter().map(|(k, v)| (k.clone(), numericize(v))).collect()),
        Value::Inert(head, args) => Value::inert(head.clone(), args.iter().map(numericize).collect()),
        other => other.clone(),
    }
}

/// Elements of a list, or the values of an association.
fn elements(name: &str, v: &Value) -> Result<Vec<Value>, EvalError> {
    match v {
        Value::List(items) => Ok(items.clone()),
        Value::Assoc(a) => Ok(a.values().cloned().collect()),
        other => Err(EvalError::arg_type(name, format!("expected a list, got {} `{other}`", other.type_name()))),
    }
}

/// Key/value pairs of an association, a rule, or a list of rules.
fn rule_pairs(name: &str, v: &Value) -> Result<Vec<(Value, Value)>, EvalError> {
    match v {
        Value::Assoc(a) => Ok(a.iter().map(|(k, v)| (k.clone(), v.clone())).collect()),
        Value::Inert(head, kv) if head == "Rule" && kv.len() == 2 => Ok(vec![(kv[0].clone(), kv[1].clone())]),
        Value::List(items) => items.iter().try_fold(Vec::new(), |mut acc, item| {
            acc.extend(rule_pairs(name, item)?);
            Ok(acc)
        }),
        other => Err(EvalError::arg_type(name, format!("expected rules or an association, got `{other}`"))),
    }
}

fn part(v: &Value, index: &Value) -> Result<Value, EvalError> {
    if let Value::List(many) = index {
        return many.iter().map(|i| part(v, i)).collect::<Result<_, _>>().map(Value::List);
    }
    let items: Vec<&Value> = match v {
        Value::List(items) | Value::Inert(_, items) => items.iter().collect(),
        Value::Assoc(a) => match index {
            Value::Int(_) => a.values().collect(),
            key => {
                return Ok(a
                    .get(key)
                    .cloned()
                    .unwrap_or_else(|| Value::inert("Missing", vec![Value::str("KeyAbsent"), key.clone()])));
            }
        },
        other => return Err(EvalError::arg_type("Part", format!("{} `{other}` has no parts", other.type_name()))),
    };
    let Value::Int(i) = index else {
        return Err(EvalError::arg_type("Part", format!("index `{index}` is not an integer")));
    };
    let len = BigInt::from(items.len());
    let pos = if i.is_negative() { &len + i } else { i - 1 };
    usize::try_from(&pos).ok().and_then(|p| items.get(p)).map(|item| (*item).clone()).ok_or_else(|| {
        EvalError::arg_type("Part", format!("part {i} of a {}-element expression does not exist", items.len()))
    })
}

/// Distance between two points given as equal-length lists of numbers (or two
/// scalars). Exact when the squared distance is a rational square.
pub fn euclidean_distance(p: &Value, q: &Value) -> Result<Value, EvalError> {
    const NAME: &str = "EuclideanDistance";
    let coords = |v: &Value| -> Result<Vec<Number>, EvalError> {
        let items = match v {
            Value::List(items) => items.as_slice(),
            scalar => std::slice::from_ref(scalar),
        };
        items.iter().map(|c| c.as_number().ok_or_else(|| operand_error(NAME, c))).collect()
    };
    let (a, b) = (coords(p)?, coords(q)?);
    if a.len() != b.len() || a.is_empty() {
        return Err(EvalError::arg_count(NAME, format!("points have {} and {} coordinates", a.len(), b.len())));
    }
    let mut sum = Number::int(0);
    for (x, y) in a.iter().zip(&b) {
        let d = x.sub(y)?;
        sum = sum.add(&d.mul(&d)?)?;
    }
    sum.sqrt().map(Value::from).map_err(|e| e.at(NAME))
}

/// Structural equality with numeric tolerance; `None` when undecidable
/// because a symbolic operand is involved.
pub(crate) fn equal(a: &Value, b: &Value) -> Option<bool> {
    if let (Some(x), Some(y)) = (a.as_number(), b.as_number()) {
        return Some(x.num_eq(&y));
    }
    match (a, b) {
        (Value::List(xs), Value::List(ys)) => {
            if xs.len() != ys.len() {
                return Some(false);
            }
            let mut undecided = false;
            for (x, y) in xs.iter().zip(ys) {
                match equal(x, y) {
                    Some(false) => return Some(false),
                    None => undecided = true,
                    Some(true) => {}
                }
            }
            if undecided {
                None
            } else {
                Some(true)
            }
        }
        _ if a == b => Some(true),
        _ if a.is_symbolic() || b.is_symbolic() => None,
        _ => Some(false),
    }
}

fn compare_chain(args: &[Value], eq: fn(&Value, &Value) -> Option<bool>) -> Value {
    let mut undecided = false;
    for pair in args.windows(2) {
        match eq(&pair[0], &pair[1]) {
            Some(false) => return Value::Bool(false),
            None => undecided = true,
            Some(true) => {}
        }
    }
    if undecided {
        Value::inert("Equal", args.to_vec())
    } else {
        Value::Bool(true)
    }
}

/// True when all arguments are pairwise distinct.
fn unequal(args: &[Value]) -> Value {
    let mut undecided = false;
    for (i, a) in args.iter().enumerate() {
        for b in &args[i + 1..] {
            match equal(a, b) {
                Some(true) => return Value::Bool(false),
                None => undecided = true,
                Some(false) => {}
            }
        }
    }
    if undecided {
        Value::inert("Unequal", args.to_vec())
    } else {
        Value::Bool(true)
    }
}

fn order_chain(name: &str, args: &[Value]) -> Result<Value, EvalError> {
    if args.iter().any(Value::is_symbolic) {
        if let Some(bad) = args.iter().find(|v| !v.is_number() && !v.is_symbolic()) {
            return Err(operand_error(name, bad));
        }
        return Ok(Value::inert(name, args.to_vec()));
    }
    let nums: Vec<Number> =
        args.iter().map(|v| v.as_number().ok_or_else(|| operand_error(name, v))).collect::<Result<_, _>>()?;
    let holds = nums.windows(2).all(|w| {
        let ord = w[0].compare(&w[1]);
        match name {
            "Less" => ord == Ordering::Less,
            "LessEqual" => ord != Ordering::Greater,
            "Greater" => ord == Ordering::Greater,
            _ => ord != Ordering::Less,
        }
    });
    Ok(Value::Bool(holds))
}
