//! Evaluator for the symbolic language: exact arithmetic, scoped bindings,
//! pure functions, and a small algebra kernel, all under resource limits.

mod algebra;
mod builtins;
mod env;
mod error;
mod eval;
mod limits;
mod number;
mod value;

pub use algebra::{simplify, solve};
pub use builtins::euclidean_distance;
pub use env::{Binding, Environment, Scope};
pub use error::{EvalError, EvalErrorKind, LimitKind};
pub use eval::{entry_point, evaluate, evaluate_traced, EvalStats, Evaluator};
pub use limits::{InvalidLimits, Limits};
pub use number::{Number, MAX_EXACT_BITS, REAL_EQUAL_TOLERANCE};
pub use value::{Association, Closure, Value};
