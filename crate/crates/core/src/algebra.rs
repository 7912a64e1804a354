//! Exact arithmetic on the bi-Gödel algebra over the rational unit interval.
//!
//! Every truth degree in the crate is a [`Rational01`]: an arbitrary-precision
//! rational kept in lowest terms and confined to `[0, 1]`. There is no floating
//! point anywhere in the evaluation path.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("value {0} lies outside the unit interval")]
    OutOfRange(String),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("cannot parse `{0}` as a rational or decimal")]
    Syntax(String),
}

/// A rational number in `[0, 1]`, always in canonical (reduced) form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational01(BigRational);

impl Rational01 {
    pub fn zero() -> Self {
        Rational01(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational01(BigRational::one())
    }

    /// Builds `num/den`, reducing to lowest terms.
    pub fn new(num: i64, den: i64) -> Result<Self, ValueError> {
        if den == 0 {
            return Err(ValueError::ZeroDenominator);
        }
        Self::from_big(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_big(r: BigRational) -> Result<Self, ValueError> {
        if r.is_negative() || r > BigRational::one() {
            return Err(ValueError::OutOfRange(r.to_string()));
        }
        Ok(Rational01(r))
    }

    /// `k/n` for grid points; panics if `k > n` or `n == 0`.
    pub fn grid(k: u32, n: u32) -> Self {
        assert!(n > 0 && k <= n, "grid point {k}/{n} out of range");
        Rational01(BigRational::new(BigInt::from(k), BigInt::from(n)))
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// Crisp values are exactly 0 and 1.
    pub fn is_crisp(&self) -> bool {
        self.is_zero() || self.is_one()
    }

    /// Gödel conjunction: `min(a, b)`.
    pub fn meet(&self, other: &Self) -> Self {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Gödel disjunction: `max(a, b)`.
    pub fn join(&self, other: &Self) -> Self {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Gödel implication: 1 when `a <= b`, otherwise `b`.
    pub fn gimpl(&self, other: &Self) -> Self {
        if self <= other {
            Self::one()
        } else {
            other.clone()
        }
    }

    /// Gödel coimplication: 0 when `a <= b`, otherwise `a`.
    pub fn gcoimpl(&self, other: &Self) -> Self {
        if self <= other {
            Self::zero()
        } else {
            self.clone()
        }
    }
}

pub fn meet(a: &Rational01, b: &Rational01) -> Rational01 {
    a.meet(b)
}

pub fn join(a: &Rational01, b: &Rational01) -> Rational01 {
    a.join(b)
}

pub fn gimpl(a: &Rational01, b: &Rational01) -> Rational01 {
    a.gimpl(b)
}

pub fn gcoimpl(a: &Rational01, b: &Rational01) -> Rational01 {
    a.gcoimpl(b)
}

impl fmt::Display for Rational01 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational01 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts `p/q`, plain integers, and decimal literals such as `0.7` (read
/// exactly as `7/10`).
impl FromStr for Rational01 {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let syntax = || ValueError::Syntax(s.to_string());
        let digits = |d: &str| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit());
        if let Some((n, d)) = t.split_once('/') {
            let (n, d) = (n.trim(), d.trim());
            if !digits(n) || !digits(d) {
                return Err(syntax());
            }
            let n: BigInt = n.parse().map_err(|_| syntax())?;
            let d: BigInt = d.parse().map_err(|_| syntax())?;
            if d.is_zero() {
                return Err(ValueError::ZeroDenominator);
            }
            return Self::from_big(BigRational::new(n, d));
        }
        let (int_part, frac_part) = match t.split_once('.') {
            Some((i, f)) => (i, f),
            None => (t, ""),
        };
        let int_ok = digits(int_part) || (int_part.is_empty() && !frac_part.is_empty());
        if !int_ok || (!frac_part.is_empty() && !digits(frac_part)) || t.ends_with('.') {
            return Err(syntax());
        }
        let all: String = format!("{int_part}{frac_part}");
        let num: BigInt = all.parse().map_err(|_| syntax())?;
        let den = num_traits::pow(BigInt::from(10), frac_part.len());
        Self::from_big(BigRational::new(num, den))
    }
}
