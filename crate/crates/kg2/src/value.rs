//! Exact values in the unit interval and the bi-Gödel algebra operations.
//!
//! All semantic computation in this crate is order-theoretic: every operation
//! below either selects one of its arguments or returns a constant, so the set
//! of denominators appearing in a computation never grows beyond the inputs.
//! No floating point anywhere.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// An exact rational in `[0, 1]`.
///
/// Backed by an arbitrary-precision rational kept in lowest terms with a
/// positive denominator (both are `BigRational` invariants).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Value(BigRational);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValueError {
    #[error("value {0} is outside the unit interval")]
    OutOfRange(String),
    #[error("denominator must be positive")]
    ZeroDenominator,
    #[error("malformed rational literal `{0}` (expected `n` or `n/d`)")]
    Malformed(String),
}

impl Value {
    pub fn zero() -> Self {
        Value(BigRational::zero())
    }

    pub fn one() -> Self {
        Value(BigRational::one())
    }

    /// Builds `num/den`, rejecting values outside `[0, 1]`.
    pub fn new(num: i64, den: i64) -> Result<Self, ValueError> {
        if den == 0 {
            return Err(ValueError::ZeroDenominator);
        }
        Self::from_rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_rational(r: BigRational) -> Result<Self, ValueError> {
        if r.is_negative() || r > BigRational::one() {
            return Err(ValueError::OutOfRange(r.to_string()));
        }
        Ok(Value(r))
    }

    /// Grid point `i/denom`; panics if `i > denom` or `denom == 0`.
    pub fn grid(i: u64, denom: u64) -> Self {
        assert!(denom > 0 && i <= denom, "grid point {i}/{denom} out of range");
        Value(BigRational::new(BigInt::from(i), BigInt::from(denom)))
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// `true` when the value is 0 or 1.
    pub fn is_crisp(&self) -> bool {
        self.is_zero() || self.is_one()
    }

    /// `1 - self`, exact.
    pub fn complement(&self) -> Self {
        Value(BigRational::one() - &self.0)
    }

    /// Gödel conjunction: `min`.
    pub fn meet(&self, other: &Self) -> Self {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Gödel disjunction: `max`.
    pub fn join(&self, other: &Self) -> Self {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Gödel implication (residuum): `1` if `self <= other`, else `other`.
    pub fn residuum(&self, other: &Self) -> Self {
        if self <= other {
            Value::one()
        } else {
            other.clone()
        }
    }

    /// Gödel co-implication: `0` if `self <= other`, else `self`.
    pub fn coresiduum(&self, other: &Self) -> Self {
        if self <= other {
            Value::zero()
        } else {
            self.clone()
        }
    }

    /// Gödel negation: `1` at 0, else `0`.
    pub fn gneg(&self) -> Self {
        if self.is_zero() {
            Value::one()
        } else {
            Value::zero()
        }
    }

    /// Baaz Delta: `1` at 1, else `0`.
    pub fn delta(&self) -> Self {
        if self.is_one() {
            Value::one()
        } else {
            Value::zero()
        }
    }
}

impl fmt::Display for Value {
    /// Renders as `n` for integers and `n/d` otherwise, always in lowest terms.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Value {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let malformed = || ValueError::Malformed(s.to_string());
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let num: BigInt = num.parse().map_err(|_| malformed())?;
        let den: BigInt = den.parse().map_err(|_| malformed())?;
        if den.is_zero() {
            return Err(ValueError::ZeroDenominator);
        }
        Self::from_rational(BigRational::new(num, den))
    }
}

impl serde::Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The pair (support of truth, support of falsity).
///
/// The two components are independent: `(1,1)` and `(0,0)` are both legal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthPair {
    pub pos: Value,
    pub neg: Value,
}

impl TruthPair {
    pub fn new(pos: Value, neg: Value) -> Self {
        TruthPair { pos, neg }
    }

    /// The designated value `(1, 0)`.
    pub fn designated() -> Self {
        TruthPair::new(Value::one(), Value::zero())
    }

    pub fn is_designated(&self) -> bool {
        self.pos.is_one() && self.neg.is_zero()
    }

    /// `(x, y) -> (y, x)`, the De Morgan flip.
    pub fn flip(&self) -> Self {
        TruthPair::new(self.neg.clone(), self.pos.clone())
    }

    /// `(x, y) -> (1-y, 1-x)`, the star-conflation flip.
    pub fn conflate(&self) -> Self {
        TruthPair::new(self.neg.complement(), self.pos.complement())
    }
}

impl fmt::Display for TruthPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.pos, self.neg)
    }
}

impl fmt::Debug for TruthPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl PartialOrd for TruthPair {
    /// Truth order: more true and less false. Partial.
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let p = self.pos.cmp(&other.pos);
        let n = other.neg.cmp(&self.neg);
        if p == n {
            Some(p)
        } else if p == Ordering::Equal {
            Some(n)
        } else if n == Ordering::Equal {
            Some(p)
        } else {
            None
        }
    }
}

/// Convenience constructor used all over the test suites.
pub fn val(num: i64, den: i64) -> Value {
    Value::new(num, den).expect("test value out of range")
}
