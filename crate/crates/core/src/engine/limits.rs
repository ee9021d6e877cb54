use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Resource budget for a single evaluation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    /// Evaluation reductions (one per visited node or function application).
    pub max_steps: u64,
    /// Nesting depth of the evaluator's recursion.
    pub max_depth: usize,
    pub max_list_len: usize,
    pub wall_clock_ms: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_steps: 100_000, max_depth: 512, max_list_len: 100_000, wall_clock_ms: 2_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("limit `{0}` must be strictly positive")]
pub struct InvalidLimits(pub &'static str);

impl Limits {
    pub fn validate(&self) -> Result<(), InvalidLimits> {
        if self.max_steps == 0 {
            return Err(InvalidLimits("max_steps"));
        }
        if self.max_depth == 0 {
            return Err(InvalidLimits("max_depth"));
        }
        if self.max_list_len == 0 {
            return Err(InvalidLimits("max_list_len"));
        }
        if self.wall_clock_ms == 0 {
            return Err(InvalidLimits("wall_clock_ms"));
        }
        Ok(())
    }

    pub fn wall_clock(&self) -> Duration {
        Duration::from_millis(self.wall_clock_ms)
    }

    pub fn with_steps(mut self, steps: u64) -> Self {
        self.max_steps = steps;
        self
    }

    pub fn with_wall_clock_ms(mut self, ms: u64) -> Self {
        self.wall_clock_ms = ms;
        self
    }
}
