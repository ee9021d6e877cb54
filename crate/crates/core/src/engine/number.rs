//! Numeric tower used by the evaluator: exact rationals with binary64 contagion.

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use super::error::{EvalError, EvalErrorKind, LimitKind};

/// Exact results wider than this many bits (numerator plus denominator) abort
/// evaluation; one reduction must not be able to allocate without bound.
pub const MAX_EXACT_BITS: u64 = 1 << 18;

/// Relative tolerance for equality when a binary64 operand is involved.
pub const REAL_EQUAL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum Number {
    Exact(BigRational),
    Real(f64),
}

impl Number {
    pub fn int(n: impl Into<BigInt>) -> Number {
        Number::Exact(BigRational::from_integer(n.into()))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Exact(q) => q.is_zero(),
            Number::Real(x) => *x == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Number::Exact(q) if q.is_one())
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Number::Exact(q) => q.is_negative(),
            Number::Real(x) => *x < 0.0,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(q) => rational_to_f64(q),
            Number::Real(x) => *x,
        }
    }

    pub fn as_integer(&self) -> Option<&BigInt> {
        match self {
            Number::Exact(q) if q.is_integer() => Some(q.numer()),
            _ => None,
        }
    }

    pub fn neg(&self) -> Number {
        match self {
            Number::Exact(q) => Number::Exact(-q),
            Number::Real(x) => Number::Real(-x),
        }
    }

    pub fn abs(&self) -> Number {
        match self {
            Number::Exact(q) => Number::Exact(q.abs()),
            Number::Real(x) => Number::Real(x.abs()),
        }
    }

    pub fn add(&self, other: &Number) -> Result<Number, EvalError> {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => checked_exact(a + b),
            _ => checked_real(self.to_f64() + other.to_f64()),
        }
    }

    pub fn sub(&self, other: &Number) -> Result<Number, EvalError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Number) -> Result<Number, EvalError> {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => checked_exact(a * b),
            _ => checked_real(self.to_f64() * other.to_f64()),
        }
    }

    pub fn div(&self, other: &Number) -> Result<Number, EvalError> {
        if other.is_zero() {
            return Err(EvalError::new(EvalErrorKind::DivisionByZero, "zero denominator").at("Divide"));
        }
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => checked_exact(a / b),
            _ => checked_real(self.to_f64() / other.to_f64()),
        }
    }

    pub fn to_real(&self) -> Number {
        Number::Real(self.to_f64())
    }

    /// Ordering; mixed exact/real operands compare as binary64.
    pub fn compare(&self, other: &Number) -> Ordering {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => a.cmp(b),
            _ => self.to_f64().partial_cmp(&other.to_f64()).unwrap_or(Ordering::Equal),
        }
    }

    /// Numeric equality: exact when both operands are exact, otherwise within
    /// [`REAL_EQUAL_TOLERANCE`] relative to the larger magnitude.
    pub fn num_eq(&self, other: &Number) -> bool {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => a == b,
            _ => {
                let (a, b) = (self.to_f64(), other.to_f64());
                a == b || (a - b).abs() <= REAL_EQUAL_TOLERANCE * a.abs().max(b.abs())
            }
        }
    }

    pub fn pow(&self, exponent: &Number) -> Result<Number, EvalError> {
        match (self, exponent) {
            (Number::Exact(base), Number::Exact(exp)) => exact_pow(base, exp),
            _ => {
                let (b, e) = (self.to_f64(), exponent.to_f64());
                if b == 0.0 && e < 0.0 {
                    return Err(
                        EvalError::new(EvalErrorKind::DivisionByZero, "0 raised to a negative power").at("Power")
                    );
                }
                let r = b.powf(e);
                if r.is_nan() {
                    return Err(
                        EvalError::new(EvalErrorKind::BadArgType, format!("{b}^{e} has no real value")).at("Power")
                    );
                }
                checked_real(r)
            }
        }
    }

    /// Exact square root when the operand is the square of a rational,
    /// binary64 otherwise.
    pub fn sqrt(&self) -> Result<Number, EvalError> {
        if self.is_negative() {
            return Err(EvalError::new(EvalErrorKind::BadArgType, "square root of a negative number").at("Sqrt"));
        }
        match self {
            Number::Exact(q) => {
                Ok(exact_sqrt(q).map_or_else(|| Number::Real(rational_to_f64(q).sqrt()), Number::Exact))
            }
            Number::Real(x) => Ok(Number::Real(x.sqrt())),
        }
    }

    pub fn floor(&self) -> Result<Number, EvalError> {
        match self {
            Number::Exact(q) => Ok(Number::int(q.numer().div_floor(q.denom()))),
            Number::Real(x) => real_to_integer(x.floor()),
        }
    }

    pub fn ceiling(&self) -> Result<Number, EvalError> {
        match self {
            Number::Exact(q) => Ok(Number::int(-((-q.numer()).div_floor(q.denom())))),
            Number::Real(x) => real_to_integer(x.ceil()),
        }
    }

    /// Nearest integer, ties to even.
    pub fn round(&self) -> Result<Number, EvalError> {
        match self {
            Number::Exact(q) => {
                let floor = q.numer().div_floor(q.denom());
                let frac = q - BigRational::from_integer(floor.clone());
                let half = BigRational::new(BigInt::one(), BigInt::from(2));
                let up = match frac.cmp(&half) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => floor.is_odd(),
                };
                Ok(Number::int(if up { floor + 1 } else { floor }))
            }
            Number::Real(x) => real_to_integer(x.round_ties_even()),
        }
    }

    /// Remainder with the sign of the divisor.
    pub fn modulo(&self, divisor: &Number) -> Result<Number, EvalError> {
        if divisor.is_zero() {
            return Err(EvalError::new(EvalErrorKind::DivisionByZero, "modulus by zero").at("Mod"));
        }
        match (self, divisor) {
            (Number::Exact(a), Number::Exact(b)) => {
                let q = a / b;
                let floor = BigRational::from_integer(q.numer().div_floor(q.denom()));
                checked_exact(a - b * floor)
            }
            _ => {
                let (a, b) = (self.to_f64(), divisor.to_f64());
                checked_real(a - b * (a / b).floor())
            }
        }
    }
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| if q.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

fn exact_bits(q: &BigRational) -> u64 {
    q.numer().bits() + q.denom().bits()
}

fn size_error() -> EvalError {
    EvalError::new(
        EvalErrorKind::LimitExceeded(LimitKind::IntegerSize),
        format!("exact result exceeds {MAX_EXACT_BITS} bits"),
    )
}

fn checked_exact(q: BigRational) -> Result<Number, EvalError> {
    if exact_bits(&q) > MAX_EXACT_BITS {
        return Err(size_error());
    }
    Ok(Number::Exact(q))
}

fn checked_real(x: f64) -> Result<Number, EvalError> {
    if x.is_finite() {
        Ok(Number::Real(x))
    } else {
        Err(EvalError::new(EvalErrorKind::BadArgType, "real arithmetic overflowed"))
    }
}

fn real_to_integer(x: f64) -> Result<Number, EvalError> {
    BigInt::from_f64(x).map(Number::int).ok_or_else(|| EvalError::new(EvalErrorKind::BadArgType, "non-finite real"))
}

/// Square root of a rational when it is itself rational.
pub fn exact_sqrt(q: &BigRational) -> Option<BigRational> {
    exact_root(q, 2)
}

fn exact_root(q: &BigRational, n: u32) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let num = q.numer().nth_root(n);
    let den = q.denom().nth_root(n);
    if num.pow(n) == *q.numer() && den.pow(n) == *q.denom() {
        Some(BigRational::new(num, den))
    } else {
        None
    }
}

fn exact_pow(base: &BigRational, exp: &BigRational) -> Result<Number, EvalError> {
    if base.is_zero() {
        return match exp.sign_of() {
            Sign::Plus => Ok(Number::int(0)),
            Sign::NoSign => Err(EvalError::new(EvalErrorKind::BadArgType, "0^0 is indeterminate").at("Power")),
            Sign::Minus => {
                Err(EvalError::new(EvalErrorKind::DivisionByZero, "0 raised to a negative power").at("Power"))
            }
        };
    }
    if exp.is_integer() {
        return exact_int_pow(base, exp.numer());
    }
    // Rational exponent p/q: exact when the q-th root is rational.
    let (p, q) = (exp.numer(), exp.denom());
    if base.is_negative() {
        return Err(EvalError::new(EvalErrorKind::BadArgType, "fractional power of a negative number").at("Power"));
    }
    if let Some(root) = q.to_u32().filter(|&q| q <= 64).and_then(|q| exact_root(base, q)) {
        return exact_int_pow(&root, p);
    }
    checked_real(rational_to_f64(base).powf(rational_to_f64(exp)))
}

fn exact_int_pow(base: &BigRational, exp: &BigInt) -> Result<Number, EvalError> {
    if base.abs().is_one() {
        let odd = exp.is_odd();
        return Ok(Number::Exact(if base.is_negative() && odd { -BigRational::one() } else { BigRational::one() }));
    }
    let magnitude = exp.abs();
    let e = magnitude.to_u64().filter(|&e| e.saturating_mul(exact_bits(base)) <= MAX_EXACT_BITS);
    let Some(e) = e else {
        return Err(size_error());
    };
    let e = u32::try_from(e).map_err(|_| size_error())?;
    let powered = BigRational::new(base.numer().pow(e), base.denom().pow(e));
    if exp.is_negative() {
        checked_exact(powered.recip())
    } else {
        checked_exact(powered)
    }
}

trait SignOf {
    fn sign_of(&self) -> Sign;
}

impl SignOf for BigRational {
    fn sign_of(&self) -> Sign {
        if self.is_zero() {
            Sign::NoSign
        } else if self.is_negative() {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}
