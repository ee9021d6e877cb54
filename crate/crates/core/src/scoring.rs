//! Ground-truth matching, the scalar reward, and percentage reporting.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Number, Value};
use crate::extraction::Outcome;

pub const DEFAULT_REL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerType {
    Option,
    Exact,
    Approx,
    Text,
}

impl FromStr for AnswerType {
    type Err = TruthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "option" => Ok(AnswerType::Option),
            "exact" => Ok(AnswerType::Exact),
            "approx" => Ok(AnswerType::Approx),
            "text" => Ok(AnswerType::Text),
            other => Err(TruthError::UnknownAnswerType(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum TruthError {
    #[error("unknown answer_type `{0}` (expected option, exact, approx or text)")]
    UnknownAnswerType(String),
    #[error("option answer must be a single letter A-E, got `{0}`")]
    BadOption(String),
    #[error("`{0}` is not an exact number")]
    BadExact(String),
    #[error("`{0}` is not a number")]
    BadApprox(String),
    #[error("rel_tol must be finite and positive, got {0}")]
    BadTolerance(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroundTruth {
    /// Always one of `A`..=`E`.
    OptionLetter(char),
    ExactNumber(BigRational),
    ApproxNumber {
        value: f64,
        rel_tol: f64,
    },
    Text(String),
}

/// Integers, fractions `p/q`, and finite decimals, all read exactly.
fn parse_exact(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Ok(q) = BigRational::from_str(s) {
        return Some(q);
    }
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = digits.split_once('.')?;
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let numer = BigInt::from_str(&format!("{int}{frac}")).ok()?;
    let q = BigRational::new(numer, BigInt::from(10).pow(frac.len() as u32));
    Some(if neg { -q } else { q })
}

impl GroundTruth {
    pub fn option(letter: &str) -> Result<Self, TruthError> {
        let trimmed = letter.trim();
        let mut chars = trimmed.chars();
        match (chars.next().map(|c| c.to_ascii_uppercase()), chars.next()) {
            (Some(c @ 'A'..='E'), None) => Ok(GroundTruth::OptionLetter(c)),
            _ => Err(TruthError::BadOption(letter.to_string())),
        }
    }

    pub fn approx(value: f64, rel_tol: f64) -> Result<Self, TruthError> {
        if !value.is_finite() {
            return Err(TruthError::BadApprox(value.to_string()));
        }
        if !(rel_tol.is_finite() && rel_tol > 0.0) {
            return Err(TruthError::BadTolerance(rel_tol));
        }
        Ok(GroundTruth::ApproxNumber { value, rel_tol })
    }

    /// Builds a truth from its wire form. `rel_tol` only applies to `approx`.
    pub fn parse(answer_type: AnswerType, answer: &str, rel_tol: Option<f64>) -> Result<Self, TruthError> {
        match answer_type {
            AnswerType::Option => GroundTruth::option(answer),
            AnswerType::Exact => parse_exact(answer)
                .map(GroundTruth::ExactNumber)
                .ok_or_else(|| TruthError::BadExact(answer.to_string())),
            AnswerType::Approx => {
                let value = answer.trim().parse::<f64>().map_err(|_| TruthError::BadApprox(answer.to_string()))?;
                GroundTruth::approx(value, rel_tol.unwrap_or(DEFAULT_REL_TOL))
            }
            AnswerType::Text => Ok(GroundTruth::Text(answer.to_string())),
        }
    }

    pub fn answer_type(&self) -> AnswerType {
        match self {
            GroundTruth::OptionLetter(_) => AnswerType::Option,
            GroundTruth::ExactNumber(_) => AnswerType::Exact,
            GroundTruth::ApproxNumber { .. } => AnswerType::Approx,
            GroundTruth::Text(_) => AnswerType::Text,
        }
    }
}

fn fold(s: &str) -> String {
    s.trim().to_lowercase()
}

/// Whether a ground answer value matches the truth.
pub fn match_answer(answer: &Value, truth: &GroundTruth) -> bool {
    match truth {
        GroundTruth::OptionLetter(letter) => match answer {
            Value::Str(s) => s.trim().to_uppercase() == letter.to_string(),
            _ => false,
        },
        GroundTruth::ExactNumber(q) => match answer.as_number() {
            Some(Number::Exact(a)) => a == *q,
            Some(Number::Real(x)) => BigRational::from_float(x).is_some_and(|a| a == *q),
            None => false,
        },
        GroundTruth::ApproxNumber { value, rel_tol } => match answer.as_number() {
            Some(n) => (n.to_f64() - value).abs() <= rel_tol * value.abs().max(1.0),
            None => false,
        },
        GroundTruth::Text(t) => match answer {
            Value::Str(s) => fold(s) == fold(t),
            other => fold(&other.to_string()) == fold(t),
        },
    }
}

pub fn is_correct(outcome: &Outcome, truth: &GroundTruth) -> bool {
    outcome.answer().is_some_and(|a| match_answer(a, truth))
}

#[derive(Debug, Error)]
pub enum RewardConfigError {
    #[error("cannot read reward config: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid reward config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("weight `{0}` must be finite and non-negative")]
    BadWeight(&'static str),
    #[error("at least one reward weight must be positive")]
    AllZero,
}

/// Weights of the three reward indicators. With `components_additive` off,
/// only the weight of the highest tier reached is paid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub w_correct: f64,
    pub w_error_free: f64,
    pub w_has_code: f64,
    pub components_additive: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { w_correct: 1.0, w_error_free: 0.2, w_has_code: 0.1, components_additive: true }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardConfigError> {
        for (name, w) in
            [("w_correct", self.w_correct), ("w_error_free", self.w_error_free), ("w_has_code", self.w_has_code)]
        {
            if !(w.is_finite() && w >= 0.0) {
                return Err(RewardConfigError::BadWeight(name));
            }
        }
        if self.w_correct + self.w_error_free + self.w_has_code <= 0.0 {
            return Err(RewardConfigError::AllZero);
        }
        Ok(())
    }

    /// Reads a TOML table. A `[reward]` section is used when present,
    /// otherwise the top level.
    pub fn from_toml_str(text: &str) -> Result<Self, RewardConfigError> {
        #[derive(Deserialize)]
        struct Wrapped {
            reward: RewardConfig,
        }
        let config = match toml::from_str::<Wrapped>(text) {
            Ok(w) => w.reward,
            Err(_) => toml::from_str::<RewardConfig>(text)?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, RewardConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn max_reward(&self) -> f64 {
        if self.components_additive {
            self.w_correct + self.w_error_free + self.w_has_code
        } else {
            self.w_correct.max(self.w_error_free).max(self.w_has_code)
        }
    }
}

/// Removes binary representation noise so that, e.g., 0.1 + 0.2 reports as 0.3.
fn tidy(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

pub fn compute_reward(outcome: &Outcome, truth: &GroundTruth, config: &RewardConfig) -> f64 {
    let has_code = outcome.has_code();
    let error_free = outcome.error_free();
    let correct = is_correct(outcome, truth);
    if !config.components_additive {
        return if correct {
            config.w_correct
        } else if error_free {
            config.w_error_free
        } else if has_code {
            config.w_has_code
        } else {
            0.0
        };
    }
    let mut total = 0.0;
    if correct {
        total += config.w_correct;
    }
    if error_free {
        total += config.w_error_free;
    }
    if has_code {
        total += config.w_has_code;
    }
    // Rounding must not lift the reward past the configured ceiling.
    tidy(total).min(config.max_reward())
}

/// A percentage held exactly in hundredths of a percent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Percentage(i64);

impl Percentage {
    pub const ZERO: Percentage = Percentage(0);
    pub const HUNDRED: Percentage = Percentage(10_000);

    /// `100 * numer / denom`, rounded to two decimals with ties away from zero.
    ///
    /// # Panics
    /// If `denom` is zero.
    pub fn from_ratio(numer: i128, denom: i128) -> Percentage {
        assert!(denom != 0, "percentage of an empty total");
        let (n, d): (BigInt, BigInt) = (BigInt::from(numer) * 10_000, BigInt::from(denom));
        let neg = n.is_negative() != d.is_negative() && !n.is_zero();
        let (n, d) = (n.abs(), d.abs());
        let hundredths = (n * 2 + &d) / (d * 2);
        let h = i64::try_from(hundredths).expect("percentage fits in i64");
        Percentage(if neg { -h } else { h })
    }

    pub fn of_counts(part: usize, total: usize) -> Percentage {
        Percentage::from_ratio(part as i128, total as i128)
    }

    pub fn from_hundredths(h: i64) -> Percentage {
        Percentage(h)
    }

    pub fn hundredths(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Percentage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", a / 100, a % 100)
    }
}

impl Serialize for Percentage {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum AccuracyError {
    #[error("no outcomes to score")]
    Empty,
    #[error("{outcomes} outcomes but {truths} ground truths")]
    LengthMismatch { outcomes: usize, truths: usize },
}

/// Share of outcomes that executed and matched their truth.
pub fn corpus_accuracy(outcomes: &[Outcome], truths: &[GroundTruth]) -> Result<Percentage, AccuracyError> {
    if outcomes.len() != truths.len() {
        return Err(AccuracyError::LengthMismatch { outcomes: outcomes.len(), truths: truths.len() });
    }
    if outcomes.is_empty() {
        return Err(AccuracyError::Empty);
    }
    let correct = outcomes.iter().zip(truths).filter(|(o, t)| is_correct(o, t)).count();
    Ok(Percentage::of_counts(correct, outcomes.len()))
}
