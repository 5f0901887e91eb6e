//! Exact rationals with an `i64` fast path, and the extended value lattice `ExtQ`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ParseError;

/// Exact rational number. Values that fit in `Ratio<i64>` are always stored small,
/// so structural equality coincides with numeric equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Q {
    Small(Ratio<i64>),
    Big(Box<BigRational>),
}

fn big_of(r: &Ratio<i64>) -> BigRational {
    BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

impl Q {
    pub fn zero() -> Q {
        Q::Small(Ratio::from_integer(0))
    }

    pub fn one() -> Q {
        Q::Small(Ratio::from_integer(1))
    }

    pub fn from_int(n: i64) -> Q {
        Q::Small(Ratio::from_integer(n))
    }

    /// `num / den`; panics on a zero denominator.
    pub fn new(num: i64, den: i64) -> Q {
        assert!(den != 0, "zero denominator");
        if num == i64::MIN || den == i64::MIN {
            return Q::from_big(BigRational::new(BigInt::from(num), BigInt::from(den)));
        }
        Q::Small(Ratio::new(num, den))
    }

    pub fn from_big(r: BigRational) -> Q {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) if n != i64::MIN && d != i64::MIN => Q::Small(Ratio::new_raw(n, d)),
            _ => Q::Big(Box::new(r)),
        }
    }

    pub fn to_big(&self) -> BigRational {
        match self {
            Q::Small(r) => big_of(r),
            Q::Big(b) => (**b).clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Q::Small(r) => r.is_zero(),
            Q::Big(b) => b.is_zero(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Q::Small(r) => r.is_negative(),
            Q::Big(b) => b.is_negative(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match self {
            Q::Small(r) => r.is_integer(),
            Q::Big(b) => b.is_integer(),
        }
    }

    pub fn add(&self, other: &Q) -> Q {
        if let (Q::Small(a), Q::Small(b)) = (self, other) {
            if a.is_integer() && b.is_integer() {
                if let Some(n) = i64::checked_add(*a.numer(), *b.numer()) {
                    return Q::from_int(n);
                }
            }
            if let Some(r) = a.checked_add(b) {
                return Q::Small(r);
            }
        }
        Q::from_big(self.to_big() + other.to_big())
    }

    pub fn sub(&self, other: &Q) -> Q {
        if let (Q::Small(a), Q::Small(b)) = (self, other) {
            if a.is_integer() && b.is_integer() {
                if let Some(n) = i64::checked_sub(*a.numer(), *b.numer()) {
                    return Q::from_int(n);
                }
            }
            if let Some(r) = a.checked_sub(b) {
                return Q::Small(r);
            }
        }
        Q::from_big(self.to_big() - other.to_big())
    }

    pub fn mul(&self, other: &Q) -> Q {
        if let (Q::Small(a), Q::Small(b)) = (self, other) {
            if a.is_zero() || b.is_one() {
                return self.clone();
            }
            if b.is_zero() || a.is_one() {
                return other.clone();
            }
            if a.is_integer() && b.is_integer() {
                if let Some(n) = i64::checked_mul(*a.numer(), *b.numer()) {
                    return Q::from_int(n);
                }
            }
            if let Some(r) = a.checked_mul(b) {
                return Q::Small(r);
            }
        }
        Q::from_big(self.to_big() * other.to_big())
    }

    /// Panics on division by zero.
    pub fn div(&self, other: &Q) -> Q {
        assert!(!other.is_zero(), "division by zero");
        if let (Q::Small(a), Q::Small(b)) = (self, other) {
            if let Some(r) = a.checked_div(b) {
                return Q::Small(r);
            }
        }
        Q::from_big(self.to_big() / other.to_big())
    }

    pub fn pow(&self, exp: u32) -> Q {
        (0..exp).fold(Q::one(), |acc, _| acc.mul(self))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Q::Small(r) => *r.numer() as f64 / *r.denom() as f64,
            Q::Big(b) => {
                let n = b.numer().to_f64().unwrap_or(f64::NAN);
                let d = b.denom().to_f64().unwrap_or(f64::NAN);
                if n.is_finite() && d.is_finite() {
                    n / d
                } else {
                    // scale both down by the same power of two
                    let shift = b.denom().bits().max(b.numer().bits()).saturating_sub(1000);
                    let n = (b.numer() >> shift).to_f64().unwrap_or(0.0);
                    let d = (b.denom() >> shift).to_f64().unwrap_or(1.0);
                    n / d
                }
            }
        }
    }
}

impl Ord for Q {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Q::Small(a), Q::Small(b)) if a.is_integer() && b.is_integer() => a.numer().cmp(b.numer()),
            (Q::Small(a), Q::Small(b)) => {
                let lhs = i128::from(*a.numer()) * i128::from(*b.denom());
                let rhs = i128::from(*b.numer()) * i128::from(*a.denom());
                lhs.cmp(&rhs)
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Q {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Q::Small(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Q::Small(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Q::Big(b) if b.is_integer() => write!(f, "{}", b.numer()),
            Q::Big(b) => write!(f, "{}/{}", b.numer(), b.denom()),
        }
    }
}

impl fmt::Debug for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Q {
    type Err = ParseError;

    /// Accepts `n`, `n/d` and decimals such as `0.25` or `-1.5`.
    fn from_str(text: &str) -> Result<Q, ParseError> {
        let t = text.trim();
        let bad = || ParseError::msg(format!("invalid rational literal `{t}`"));
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(ParseError::msg(format!("zero denominator in `{t}`")));
            }
            return Ok(Q::from_big(BigRational::new(n, d)));
        }
        if let Some((int, frac)) = t.split_once('.') {
            let negative = int.starts_with('-');
            if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let int_part: BigInt = if int.is_empty() || int == "-" {
                BigInt::zero()
            } else {
                int.parse().map_err(|_| bad())?
            };
            let frac_part: BigInt = frac.parse().map_err(|_| bad())?;
            let scale = num_traits::pow(BigInt::from(10), frac.len());
            let mag = int_part.abs() * &scale + frac_part;
            let num = if negative { -mag } else { mag };
            return Ok(Q::from_big(BigRational::new(num, scale)));
        }
        let n: BigInt = t.parse().map_err(|_| bad())?;
        Ok(Q::from_big(BigRational::from_integer(n)))
    }
}

/// A nonnegative rational or infinity.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum ExtQ {
    Fin(Q),
    Inf,
}

impl ExtQ {
    pub fn zero() -> ExtQ {
        ExtQ::Fin(Q::zero())
    }

    pub fn one() -> ExtQ {
        ExtQ::Fin(Q::one())
    }

    pub fn int(n: u64) -> ExtQ {
        ExtQ::Fin(Q::from_int(n as i64))
    }

    pub fn ratio(num: i64, den: i64) -> ExtQ {
        ExtQ::fin(Q::new(num, den))
    }

    /// Wraps a rational; panics if it is negative.
    pub fn fin(q: Q) -> ExtQ {
        assert!(!q.is_negative(), "expectation values are nonnegative, got {q}");
        ExtQ::Fin(q)
    }

    pub fn bool(b: bool) -> ExtQ {
        if b {
            ExtQ::one()
        } else {
            ExtQ::zero()
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtQ::Fin(q) if q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, ExtQ::Fin(q) if *q == Q::one())
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, ExtQ::Inf)
    }

    pub fn finite(&self) -> Option<&Q> {
        match self {
            ExtQ::Fin(q) => Some(q),
            ExtQ::Inf => None,
        }
    }

    pub fn add(&self, other: &ExtQ) -> ExtQ {
        match (self, other) {
            (ExtQ::Fin(a), ExtQ::Fin(b)) => ExtQ::Fin(a.add(b)),
            _ => ExtQ::Inf,
        }
    }

    /// Product with `0 · ∞ = 0`.
    pub fn mul(&self, other: &ExtQ) -> ExtQ {
        match (self, other) {
            (ExtQ::Fin(a), ExtQ::Fin(b)) => ExtQ::Fin(a.mul(b)),
            (ExtQ::Fin(a), ExtQ::Inf) | (ExtQ::Inf, ExtQ::Fin(a)) if a.is_zero() => ExtQ::zero(),
            _ => ExtQ::Inf,
        }
    }

    pub fn scale(&self, k: &Q) -> ExtQ {
        match self {
            ExtQ::Fin(a) => ExtQ::Fin(a.mul(k)),
            ExtQ::Inf if k.is_zero() => ExtQ::zero(),
            ExtQ::Inf => ExtQ::Inf,
        }
    }

    /// Truncated subtraction `max(a - b, 0)`; `∞ ⊖ ∞ = 0`.
    pub fn monus(&self, other: &ExtQ) -> ExtQ {
        match (self, other) {
            (_, ExtQ::Inf) => ExtQ::zero(),
            (ExtQ::Inf, ExtQ::Fin(_)) => ExtQ::Inf,
            (ExtQ::Fin(a), ExtQ::Fin(b)) => {
                if a <= b {
                    ExtQ::zero()
                } else {
                    ExtQ::Fin(a.sub(b))
                }
            }
        }
    }

    /// `1 - a`, defined only for `a ≤ 1`.
    pub fn one_minus(&self) -> Option<ExtQ> {
        match self {
            ExtQ::Fin(q) if *q <= Q::one() => Some(ExtQ::Fin(Q::one().sub(q))),
            _ => None,
        }
    }

    pub fn min_of(&self, other: &ExtQ) -> ExtQ {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn max_of(&self, other: &ExtQ) -> ExtQ {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtQ::Fin(q) => q.to_f64(),
            ExtQ::Inf => f64::INFINITY,
        }
    }

    /// `|a - b|` as an extended value; infinite unless both agree on infinity.
    pub fn distance(&self, other: &ExtQ) -> ExtQ {
        match (self, other) {
            (ExtQ::Inf, ExtQ::Inf) => ExtQ::zero(),
            (ExtQ::Fin(a), ExtQ::Fin(b)) => {
                if a >= b {
                    ExtQ::Fin(a.sub(b))
                } else {
                    ExtQ::Fin(b.sub(a))
                }
            }
            _ => ExtQ::Inf,
        }
    }
}

impl Ord for ExtQ {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtQ::Inf, ExtQ::Inf) => Ordering::Equal,
            (ExtQ::Inf, _) => Ordering::Greater,
            (_, ExtQ::Inf) => Ordering::Less,
            (ExtQ::Fin(a), ExtQ::Fin(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for ExtQ {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExtQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtQ::Fin(q) => write!(f, "{q}"),
            ExtQ::Inf => write!(f, "inf"),
        }
    }
}

impl fmt::Debug for ExtQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ExtQ {
    type Err = ParseError;

    fn from_str(text: &str) -> Result<ExtQ, ParseError> {
        let t = text.trim();
        if t == "inf" || t == "∞" {
            return Ok(ExtQ::Inf);
        }
        let q: Q = t.parse()?;
        if q.is_negative() {
            return Err(ParseError::msg(format!("negative expectation value `{t}`")));
        }
        Ok(ExtQ::Fin(q))
    }
}

impl Serialize for Q {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for ExtQ {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtQ {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<ExtQ, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl From<u64> for ExtQ {
    fn from(n: u64) -> ExtQ {
        ExtQ::int(n)
    }
}

impl One for Q {
    fn one() -> Q {
        Q::one()
    }
}

impl Zero for Q {
    fn zero() -> Q {
        Q::zero()
    }

    fn is_zero(&self) -> bool {
        Q::is_zero(self)
    }
}

impl std::ops::Add for Q {
    type Output = Q;
    fn add(self, rhs: Q) -> Q {
        Q::add(&self, &rhs)
    }
}

impl std::ops::Mul for Q {
    type Output = Q;
    fn mul(self, rhs: Q) -> Q {
        Q::mul(&self, &rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_overflow_promotes_and_demotes() {
        let big = Q::from_int(i64::MAX);
        let sum = big.add(&Q::one());
        assert!(matches!(sum, Q::Big(_)));
        let back = sum.sub(&Q::one());
        assert_eq!(back, Q::from_int(i64::MAX));
        assert!(matches!(back, Q::Small(_)));
    }

    #[test]
    fn parses_literals() {
        assert_eq!("1/2".parse::<Q>().unwrap(), Q::new(1, 2));
        assert_eq!("0.25".parse::<Q>().unwrap(), Q::new(1, 4));
        assert_eq!("-1.5".parse::<Q>().unwrap(), Q::new(-3, 2));
        assert_eq!("7".parse::<Q>().unwrap(), Q::from_int(7));
        assert!("1/0".parse::<Q>().is_err());
        assert_eq!("inf".parse::<ExtQ>().unwrap(), ExtQ::Inf);
    }

    #[test]
    fn extended_arithmetic() {
        let two = ExtQ::int(2);
        assert_eq!(ExtQ::zero().mul(&ExtQ::Inf), ExtQ::zero());
        assert_eq!(two.mul(&ExtQ::Inf), ExtQ::Inf);
        assert_eq!(two.add(&ExtQ::Inf), ExtQ::Inf);
        assert_eq!(ExtQ::one().monus(&two), ExtQ::zero());
        assert_eq!(two.monus(&ExtQ::one()), ExtQ::one());
        assert_eq!(ExtQ::ratio(1, 3).one_minus(), Some(ExtQ::ratio(2, 3)));
        assert_eq!(two.one_minus(), None);
        assert!(ExtQ::Inf > ExtQ::int(1_000_000));
    }
}
