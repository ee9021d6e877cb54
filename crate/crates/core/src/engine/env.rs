use std::collections::HashMap;
use std::sync::Arc;

use super::value::Value;
use crate::lang::Expr;

#[derive(Clone, Debug, PartialEq)]
pub enum Binding {
    /// Declared by `Module` but not yet assigned; evaluates to its own symbol.
    Unset,
    /// `x = value`
    Immediate(Value),
    /// `x := expr`, re-evaluated at every lookup.
    Delayed(Arc<Expr>),
}

#[derive(Clone, Debug, Default)]
pub struct Scope {
    bindings: HashMap<String, Binding>,
}

impl Scope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_bindings(bindings: impl IntoIterator<Item = (String, Binding)>) -> Self {
        Self { bindings: bindings.into_iter().collect() }
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

/// Scope stack with the globals at the bottom. Lookups resolve innermost
/// first; assignments go to the innermost scope that declares the name, or to
/// the globals.
#[derive(Clone, Debug)]
pub struct Environment {
    scopes: Vec<Scope>,
}

impl Default for Environment {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment {
    pub fn new() -> Self {
        Self { scopes: vec![Scope::new()] }
    }

    pub fn lookup(&self, name: &str) -> Option<&Binding> {
        self.scopes.iter().rev().find_map(|s| s.bindings.get(name))
    }

    /// Binding from a non-global scope only.
    pub fn lookup_local(&self, name: &str) -> Option<&Binding> {
        self.scopes[1..].iter().rev().find_map(|s| s.bindings.get(name))
    }

    pub fn assign(&mut self, name: &str, binding: Binding) {
        let scope = self.scopes.iter_mut().rev().find(|s| s.bindings.contains_key(name));
        match scope {
            Some(scope) => {
                scope.bindings.insert(name.to_string(), binding);
            }
            None => {
                self.scopes[0].bindings.insert(name.to_string(), binding);
            }
        }
    }

    pub fn set_global(&mut self, name: &str, value: Value) {
        self.scopes[0].bindings.insert(name.to_string(), Binding::Immediate(value));
    }

    pub fn push_scope(&mut self, scope: Scope) {
        self.scopes.push(scope);
    }

    /// Pops the innermost scope; the global scope is never popped.
    pub fn pop_scope(&mut self) -> Option<Scope> {
        if self.scopes.len() > 1 {
            self.scopes.pop()
        } else {
            None
        }
    }

    pub fn depth(&self) -> usize {
        self.scopes.len()
    }

    pub fn global_count(&self) -> usize {
        self.scopes[0].len()
    }

    pub fn global_names(&self) -> impl Iterator<Item = &str> {
        self.scopes[0].bindings.keys().map(String::as_str)
    }

    /// Drops every scope above the globals, after an aborted evaluation.
    pub(crate) fn truncate_to(&mut self, depth: usize) {
        self.scopes.truncate(depth.max(1));
    }
}
