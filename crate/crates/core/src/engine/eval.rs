use std::sync::Arc;
use std::time::{Duration, Instant};

use super::builtins;
use super::env::{Binding, Environment, Scope};
use super::error::{EvalError, EvalErrorKind, LimitKind};
use super::limits::Limits;
use super::value::{Association, Closure, Value};
use crate::lang::Expr;

/// How often (in steps) the wall clock is consulted.
const CLOCK_CHECK_INTERVAL: u64 = 64;

/// Work done by one evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalStats {
    pub steps: u64,
    pub elapsed: Duration,
}

/// Tree-walking evaluator bound to one environment and one budget.
pub struct Evaluator<'env> {
    env: &'env mut Environment,
    limits: Limits,
    steps: u64,
    depth: usize,
    started: Instant,
    slots: Vec<Vec<Value>>,
}

impl<'env> Evaluator<'env> {
    pub fn new(env: &'env mut Environment, limits: Limits) -> Self {
        Self { env, limits, steps: 0, depth: 0, started: Instant::now(), slots: Vec::new() }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn stats(&self) -> EvalStats {
        EvalStats { steps: self.steps, elapsed: self.started.elapsed() }
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    fn tick(&mut self) -> Result<(), EvalError> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(EvalError::limit(
                LimitKind::Steps,
                format!("exceeded {} evaluation steps", self.limits.max_steps),
            ));
        }
        if self.steps.is_multiple_of(CLOCK_CHECK_INTERVAL) && self.started.elapsed() > self.limits.wall_clock() {
            return Err(EvalError::limit(LimitKind::WallClock, format!("exceeded {} ms", self.limits.wall_clock_ms)));
        }
        Ok(())
    }

    pub(crate) fn check_list_len(&self, len: usize) -> Result<(), EvalError> {
        if len > self.limits.max_list_len {
            return Err(EvalError::limit(
                LimitKind::ListLength,
                format!("list of {len} elements exceeds {}", self.limits.max_list_len),
            ));
        }
        Ok(())
    }

    pub fn eval(&mut self, expr: &Expr) -> Result<Value, EvalError> {
        self.tick()?;
        self.depth += 1;
        if self.depth > self.limits.max_depth {
            self.depth -= 1;
            return Err(EvalError::limit(LimitKind::Depth, format!("recursion deeper than {}", self.limits.max_depth)));
        }
        let result = stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || self.eval_inner(expr));
        self.depth -= 1;
        result
    }

    fn eval_inner(&mut self, expr: &Expr) -> Result<Value, EvalError> {
        match expr {
            Expr::Integer(n) => Ok(Value::Int(n.clone())),
            Expr::Real(x) => Ok(Value::Real(*x)),
            Expr::Str(s) => Ok(Value::Str(s.clone())),
            Expr::Sym(name) => self.eval_symbol(name),
            Expr::Slot(n) => self.eval_slot(*n),
            Expr::List(items) => {
                self.check_list_len(items.len())?;
                items.iter().map(|e| self.eval(e)).collect::<Result<_, _>>().map(Value::List)
            }
            Expr::Assoc(entries) => {
                self.check_list_len(entries.len())?;
                let mut assoc = Association::new();
                for entry in entries {
                    let [k, v] = entry.args_of("Rule").unwrap_or_default() else {
                        return Err(EvalError::arg_type("Association", format!("entry `{entry}` is not a rule")));
                    };
                    let key = self.eval(k)?;
                    let value = self.eval(v)?;
                    assoc.insert(key, value);
                }
                Ok(Value::Assoc(assoc))
            }
            Expr::PureFn(body) => Ok(self.make_closure(body)),
            Expr::Apply(head, args) => self.eval_apply(head, args),
        }
    }

    fn eval_symbol(&mut self, name: &str) -> Result<Value, EvalError> {
        match self.env.lookup(name) {
            Some(Binding::Immediate(v)) => Ok(v.clone()),
            Some(Binding::Delayed(body)) => {
                let body = Arc::clone(body);
                self.eval(&body)
            }
            Some(Binding::Unset) | None => Ok(match name {
                "True" => Value::Bool(true),
                "False" => Value::Bool(false),
                "Null" => Value::Null,
                _ => Value::Sym(name.to_string()),
            }),
        }
    }

    fn eval_slot(&mut self, n: u32) -> Result<Value, EvalError> {
        let Some(frame) = self.slots.last() else {
            return Err(EvalError::arg_type("Slot", format!("#{n} used outside a pure function")));
        };
        frame.get(n as usize - 1).cloned().ok_or_else(|| {
            EvalError::arg_count("Slot", format!("#{n} requested but only {} argument(s) supplied", frame.len()))
        })
    }

    fn make_closure(&self, body: &Expr) -> Value {
        let mut captured: Vec<(String, Binding)> = Vec::new();
        body.for_each_symbol(&mut |name| {
            if captured.iter().any(|(n, _)| n == name) {
                return;
            }
            if let Some(binding) = self.env.lookup_local(name) {
                captured.push((name.to_string(), binding.clone()));
            }
        });
        Value::Fn(Arc::new(Closure { body: body.clone(), captured }))
    }

    fn eval_apply(&mut self, head: &Expr, args: &[Expr]) -> Result<Value, EvalError> {
        if let Expr::Sym(name) = head {
            match name.as_str() {
                "CompoundExpression" => return self.eval_compound(args),
                "Set" => return self.eval_set(args),
                "SetDelayed" => return self.eval_set_delayed(args),
                "Module" => return self.eval_module(args),
                "If" => return self.eval_if(args),
                "And" | "Or" => return self.eval_logic(name, args),
                "Function" => {
                    let [body] = args else {
                        return Err(EvalError::arg_count("Function", "Function takes one argument"));
                    };
                    return Ok(self.make_closure(body));
                }
                _ => {}
            }
            let binding = self.env.lookup(name).cloned();
            let callee = match binding {
                Some(Binding::Immediate(v)) => Some(v),
                Some(Binding::Delayed(body)) => Some(self.eval(&body)?),
                Some(Binding::Unset) | None => None,
            };
            let values = self.eval_args(args)?;
            return match callee {
                Some(f) => self.apply(&f, values),
                None => builtins::call(self, name, values),
            };
        }
        let callee = self.eval(head)?;
        let values = self.eval_args(args)?;
        self.apply(&callee, values)
    }

    fn eval_args(&mut self, args: &[Expr]) -> Result<Vec<Value>, EvalError> {
        args.iter().map(|a| self.eval(a)).collect()
    }

    /// Applies an already-evaluated function value.
    pub fn apply(&mut self, callee: &Value, args: Vec<Value>) -> Result<Value, EvalError> {
        match callee {
            Value::Fn(closure) => self.call_closure(closure, args),
            Value::Assoc(assoc) => {
                let [key] = <[Value; 1]>::try_from(args).map_err(|args| {
                    EvalError::arg_count("Association", format!("lookup takes one key, got {}", args.len()))
                })?;
                Ok(assoc.get(&key).cloned().unwrap_or_else(|| Value::inert("Missing", vec![key])))
            }
            Value::Sym(name) => builtins::call(self, name, args),
            other => Err(EvalError::new(
                EvalErrorKind::UnknownOperation,
                format!("cannot apply {} `{other}` as a function", other.type_name()),
            )),
        }
    }

    fn call_closure(&mut self, closure: &Closure, args: Vec<Value>) -> Result<Value, EvalError> {
        self.tick()?;
        let base = self.env.depth();
        self.env.push_scope(Scope::with_bindings(closure.captured.iter().cloned()));
        self.slots.push(args);
        let result = self.eval(&closure.body);
        self.slots.pop();
        self.env.truncate_to(base);
        result
    }

    fn eval_compound(&mut self, stmts: &[Expr]) -> Result<Value, EvalError> {
        let mut last = Value::Null;
        for stmt in stmts {
            last = self.eval(stmt)?;
        }
        Ok(last)
    }

    fn eval_set(&mut self, args: &[Expr]) -> Result<Value, EvalError> {
        let [lhs, rhs] = args else {
            return Err(EvalError::arg_count("Set", format!("Set takes 2 arguments, got {}", args.len())));
        };
        let value = self.eval(rhs)?;
        match lhs {
            Expr::Sym(name) => {
                self.env.assign(name, Binding::Immediate(value.clone()));
                Ok(value)
            }
            Expr::List(targets) => {
                let Value::List(items) = &value else {
                    return Err(EvalError::arg_type("Set", "destructuring assignment needs a list"));
                };
                if items.len() != targets.len() {
                    return Err(EvalError::arg_count(
                        "Set",
                        format!("cannot assign {} values to {} names", items.len(), targets.len()),
                    ));
                }
                for (target, item) in targets.iter().zip(items) {
                    let Expr::Sym(name) = target else {
                        return Err(EvalError::arg_type("Set", format!("cannot assign to `{target}`")));
                    };
                    self.env.assign(name, Binding::Immediate(item.clone()));
                }
                Ok(value)
            }
            other => Err(EvalError::arg_type("Set", format!("cannot assign to `{other}`"))),
        }
    }

    fn eval_set_delayed(&mut self, args: &[Expr]) -> Result<Value, EvalError> {
        let [lhs, rhs] = args else {
            return Err(EvalError::arg_count(
                "SetDelayed",
                format!("SetDelayed takes 2 arguments, got {}", args.len()),
            ));
        };
        let Expr::Sym(name) = lhs else {
            return Err(EvalError::arg_type("SetDelayed", format!("cannot define `{lhs}`")));
        };
        self.env.assign(name, Binding::Delayed(Arc::new(rhs.clone())));
        Ok(Value::Null)
    }

    fn eval_module(&mut self, args: &[Expr]) -> Result<Value, EvalError> {
        let [decls, body] = args else {
            return Err(EvalError::arg_count("Module", format!("Module takes 2 arguments, got {}", args.len())));
        };
        let Expr::List(decls) = decls else {
            return Err(EvalError::arg_type("Module", "first argument must be a list of local names"));
        };
        let mut scope = Vec::with_capacity(decls.len());
        for decl in decls {
            match decl {
                Expr::Sym(name) => scope.push((name.clone(), Binding::Unset)),
                Expr::Apply(..) if decl.head_name() == Some("Set") => {
                    let [Expr::Sym(name), init] = decl.args_of("Set").unwrap() else {
                        return Err(EvalError::arg_type("Module", format!("bad local declaration `{decl}`")));
                    };
                    let value = self.eval(init)?;
                    scope.push((name.clone(), Binding::Immediate(value)));
                }
                other => {
                    return Err(EvalError::arg_type("Module", format!("bad local declaration `{other}`")));
                }
            }
        }
        let base = self.env.depth();
        self.env.push_scope(Scope::with_bindings(scope));
        let result = self.eval(body);
        self.env.truncate_to(base);
        result
    }

    fn eval_if(&mut self, args: &[Expr]) -> Result<Value, EvalError> {
        if !(2..=4).contains(&args.len()) {
            return Err(EvalError::arg_count("If", format!("If takes 2 to 4 arguments, got {}", args.len())));
        }
        match self.eval(&args[0])? {
            Value::Bool(true) => self.eval(&args[1]),
            Value::Bool(false) => args.get(2).map_or(Ok(Value::Null), |e| self.eval(e)),
            other => match args.get(3) {
                Some(e) => self.eval(e),
                None => Err(EvalError::arg_type("If", format!("condition evaluated to non-boolean `{other}`"))),
            },
        }
    }

    fn eval_logic(&mut self, name: &str, args: &[Expr]) -> Result<Value, EvalError> {
        let short_circuit = name == "Or";
        for arg in args {
            match self.eval(arg)? {
                Value::Bool(b) if b == short_circuit => return Ok(Value::Bool(b)),
                Value::Bool(_) => {}
                other => {
                    return Err(EvalError::arg_type(name, format!("operand `{other}` is not a boolean")));
                }
            }
        }
        Ok(Value::Bool(!short_circuit))
    }
}

/// Name defined by the program's final statement when it is a plain
/// definition such as `f := Module[...]`. Trailing `Null`s from a closing `;`
/// are skipped.
pub fn entry_point(program: &Expr) -> Option<&str> {
    let stmts = program.args_of("CompoundExpression").unwrap_or(std::slice::from_ref(program));
    let last = stmts.iter().rev().find(|s| !s.is_sym("Null"))?;
    let args = last.args_of("SetDelayed").or_else(|| last.args_of("Set"))?;
    match args {
        [Expr::Sym(name), _] => Some(name),
        _ => None,
    }
}

/// Runs a whole program: evaluates it, then evaluates the entry point (see
/// [`entry_point`]) and requires the final answer to be ground.
pub fn evaluate_traced(
    program: &Expr,
    env: &mut Environment,
    limits: &Limits,
) -> (Result<Value, EvalError>, EvalStats) {
    let base = env.depth();
    let mut ev = Evaluator::new(env, limits.clone());
    let result = ev
        .eval(program)
        .and_then(|value| match entry_point(program) {
            Some(name) => ev.eval(&Expr::Sym(name.to_string())),
            None => Ok(value),
        })
        .and_then(|value| match value.find_non_ground() {
            None => Ok(value),
            Some(residue) => Err(EvalError::new(
                EvalErrorKind::NonGroundResult,
                format!("answer `{value}` still contains `{residue}`"),
            )),
        });
    let stats = ev.stats();
    env.truncate_to(base);
    (result, stats)
}

pub fn evaluate(program: &Expr, env: &mut Environment, limits: &Limits) -> Result<Value, EvalError> {
    evaluate_traced(program, env, limits).0
}
