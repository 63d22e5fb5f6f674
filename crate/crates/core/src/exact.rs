//! Exact rational numbers used for every real-valued quantity in the model.
//!
//! Probabilities and fidelities are written as decimal strings in instance
//! files ("0.8", "0.25") and parsed without rounding. `p/q` and plain
//! integers are accepted as well.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid exact number {input:?}: {reason}")]
pub struct ParseExactError {
    pub input: String,
    pub reason: &'static str,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ExactNumber(BigRational);

impl ExactNumber {
    pub fn zero() -> Self {
        ExactNumber(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactNumber(BigRational::one())
    }

    pub fn from_integer<T: Into<BigInt>>(value: T) -> Self {
        ExactNumber(BigRational::from_integer(value.into()))
    }

    /// `numer / denom`; panics on a zero denominator.
    pub fn ratio<N: Into<BigInt>, D: Into<BigInt>>(numer: N, denom: D) -> Self {
        ExactNumber(BigRational::new(numer.into(), denom.into()))
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

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn in_unit_interval(&self) -> bool {
        !self.0.is_negative() && self.0 <= BigRational::one()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    /// Integer value if the number is integral and fits in a `u128`.
    pub fn to_u128(&self) -> Option<u128> {
        if self.is_integer() {
            self.0.numer().to_u128()
        } else {
            None
        }
    }

    /// Decimal expansion if the denominator only has factors 2 and 5.
    pub fn to_decimal_string(&self) -> Option<String> {
        let denom = self.0.denom().clone();
        let mut rest = denom.clone();
        let two = BigInt::from(2u8);
        let five = BigInt::from(5u8);
        let (mut twos, mut fives) = (0usize, 0usize);
        while rest.is_even() {
            rest /= &two;
            twos += 1;
        }
        while (&rest % &five).is_zero() {
            rest /= &five;
            fives += 1;
        }
        if !rest.is_one() {
            return None;
        }
        let digits = twos.max(fives);
        let scale = num_traits::pow(BigInt::from(10u8), digits);
        let scaled = self.0.numer() * (&scale / &denom);
        let negative = scaled.is_negative();
        let magnitude = scaled.abs().to_string();
        let mut out = String::new();
        if negative {
            out.push('-');
        }
        if digits == 0 {
            out.push_str(&magnitude);
            return Some(out);
        }
        let padded = format!("{:0>width$}", magnitude, width = digits + 1);
        let (int_part, frac_part) = padded.split_at(padded.len() - digits);
        out.push_str(int_part);
        out.push('.');
        out.push_str(frac_part);
        Some(out)
    }

    /// Fixed six-decimal rendering for human-facing reports only.
    pub fn to_display_f64(&self) -> String {
        format!("{:.6}", self.to_f64())
    }
}

impl FromStr for ExactNumber {
    type Err = ParseExactError;

    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let err = |reason| ParseExactError {
            input: input.to_string(),
            reason,
        };
        let s = input.trim();
        if s.is_empty() {
            return Err(err("empty"));
        }
        if let Some((n, d)) = s.split_once('/') {
            let numer: BigInt = n.trim().parse().map_err(|_| err("bad numerator"))?;
            let denom: BigInt = d.trim().parse().map_err(|_| err("bad denominator"))?;
            if denom.is_zero() {
                return Err(err("zero denominator"));
            }
            return Ok(ExactNumber(BigRational::new(numer, denom)));
        }
        let (negative, body) = match s.as_bytes()[0] {
            b'-' => (true, &s[1..]),
            b'+' => (false, &s[1..]),
            _ => (false, s),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err("no digits"));
        }
        if !int_part
            .bytes()
            .chain(frac_part.bytes())
            .all(|b| b.is_ascii_digit())
        {
            return Err(err("expected a decimal, integer or p/q"));
        }
        let digits = format!("{int_part}{frac_part}");
        let mut numer: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| err("bad digits"))?
        };
        if negative {
            numer = -numer;
        }
        let denom = num_traits::pow(BigInt::from(10u8), frac_part.len());
        Ok(ExactNumber(BigRational::new(numer, denom)))
    }
}

impl fmt::Display for ExactNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_decimal_string() {
            Some(s) => f.write_str(&s),
            None => write!(f, "{}/{}", self.0.numer(), self.0.denom()),
        }
    }
}

impl fmt::Debug for ExactNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactNumber({self})")
    }
}

impl Serialize for ExactNumber {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExactNumber {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for ExactNumber {
            type Output = ExactNumber;
            fn $method(self, rhs: ExactNumber) -> ExactNumber {
                ExactNumber(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a ExactNumber> for &'a ExactNumber {
            type Output = ExactNumber;
            fn $method(self, rhs: &'a ExactNumber) -> ExactNumber {
                ExactNumber((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<&'a ExactNumber> for ExactNumber {
            type Output = ExactNumber;
            fn $method(self, rhs: &'a ExactNumber) -> ExactNumber {
                ExactNumber(self.0.$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for ExactNumber {
    type Output = ExactNumber;
    fn neg(self) -> ExactNumber {
        ExactNumber(-self.0)
    }
}

impl Sum for ExactNumber {
    fn sum<I: Iterator<Item = ExactNumber>>(iter: I) -> Self {
        iter.fold(ExactNumber::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a ExactNumber> for ExactNumber {
    fn sum<I: Iterator<Item = &'a ExactNumber>>(iter: I) -> Self {
        iter.fold(ExactNumber::zero(), |acc, x| acc + x)
    }
}

impl From<u64> for ExactNumber {
    fn from(v: u64) -> Self {
        ExactNumber::from_integer(v)
    }
}

impl From<u128> for ExactNumber {
    fn from(v: u128) -> Self {
        ExactNumber::from_integer(v)
    }
}

impl From<i64> for ExactNumber {
    fn from(v: i64) -> Self {
        ExactNumber::from_integer(v)
    }
}

impl PartialEq<u64> for ExactNumber {
    fn eq(&self, other: &u64) -> bool {
        self.0.is_integer() && *self.0.numer() == BigInt::from(*other)
    }
}

impl PartialOrd<u64> for ExactNumber {
    fn partial_cmp(&self, other: &u64) -> Option<Ordering> {
        Some(self.cmp(&ExactNumber::from(*other)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(s: &str) -> ExactNumber {
        s.parse().unwrap()
    }

    #[test]
    fn decimal_parses_exactly() {
        assert_eq!(n("0.8"), ExactNumber::ratio(4, 5));
        assert_eq!(n("0.1") + n("0.2"), n("0.3"));
        assert_eq!(n("3/6"), n("0.5"));
        assert_eq!(n("-1.25"), ExactNumber::ratio(-5, 4));
        assert_eq!(n(".5"), n("0.5"));
        assert_eq!(n("7"), ExactNumber::from(7u64));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "abc", "1/0", "1.2.3", "-", ".", "1e5", "0x10"] {
            assert!(bad.parse::<ExactNumber>().is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn display_forms() {
        assert_eq!(n("0.80").to_string(), "0.8");
        assert_eq!(n("819200/127").to_string(), "819200/127");
        assert_eq!(n("78120").to_string(), "78120");
        assert_eq!(n("-0.05").to_string(), "-0.05");
        assert_eq!(n("6450.4").to_string(), "6450.4");
        assert_eq!(n("819200/127").to_display_f64(), "6450.393701");
    }

    #[test]
    fn ceil_and_unit_interval() {
        assert_eq!(n("819.2").ceil(), BigInt::from(820));
        assert_eq!(n("820").ceil(), BigInt::from(820));
        assert!(n("1").in_unit_interval());
        assert!(!n("1.2").in_unit_interval());
        assert!(!n("-0.1").in_unit_interval());
    }

    fn arb_exact() -> impl Strategy<Value = ExactNumber> {
        (-10_000i64..10_000, 1i64..1_000).prop_map(|(p, q)| ExactNumber::ratio(p, q))
    }

    proptest! {
        #[test]
        fn field_laws_hold(a in arb_exact(), b in arb_exact(), c in arb_exact()) {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!((&a + &b) + c.clone(), a.clone() + (&b + &c));
            prop_assert_eq!((&a * &b) * c.clone(), a.clone() * (&b * &c));
            prop_assert_eq!(&(&a + &b) - &b, a);
        }

        #[test]
        fn decimal_print_parse_identity(int in 0u64..1_000_000, frac in 0u64..1_000_000_000, digits in 1usize..=9) {
            let frac = frac % 10u64.pow(digits as u32);
            let text = format!("{int}.{frac:0width$}", width = digits);
            let value: ExactNumber = text.parse().unwrap();
            let printed = value.to_string();
            let reparsed: ExactNumber = printed.parse().unwrap();
            prop_assert_eq!(&reparsed, &value);
            // canonical form drops only trailing zeros
            let trimmed = text.trim_end_matches('0').trim_end_matches('.');
            prop_assert_eq!(printed, trimmed.to_string());
        }
    }
}
