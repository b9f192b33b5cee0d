//! Numeric tower shared by every solver.
//!
//! The canonical mode works over arbitrary-precision rationals ([`Rat`])
//! so that every comparison and every reported optimum is exact. A second
//! mode runs the same generic code over `f64` for large benchmarks.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact arbitrary-precision rational.
pub type Rat = num_rational::BigRational;

/// Number type the solvers are generic over.
///
/// `Rat` is the canonical exact instantiation; `f64` trades exactness for
/// speed in benchmarks. `NaN`s are never produced by this crate, so the
/// total ordering requirement is unproblematic for `f64`.
pub trait Scalar:
    Clone
    + PartialEq
    + PartialOrd
    + Debug
    + Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
    + Send
    + Sync
    + 'static
{
    /// True if arithmetic is exact (no rounding anywhere).
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_rat(r: &Rat) -> Self;
    fn to_f64(&self) -> f64;
    fn total_cmp(&self, other: &Self) -> Ordering;

    /// Equality for branch decisions. Exact equality in rational mode, a
    /// tight relative tolerance in float mode.
    fn branch_eq(&self, other: &Self) -> bool;

    fn half(&self) -> Self {
        self.clone() / Self::from_i64(2)
    }

    fn min_val(self, other: Self) -> Self {
        if self.total_cmp(&other) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    fn max_val(self, other: Self) -> Self {
        if self.total_cmp(&other) == Ordering::Less {
            other
        } else {
            self
        }
    }
}

impl Scalar for Rat {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        Rat::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rat::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        Ord::cmp(self, other)
    }

    fn branch_eq(&self, other: &Self) -> bool {
        self == other
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_rat(r: &Rat) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }

    fn branch_eq(&self, other: &Self) -> bool {
        let scale = self.abs().max(other.abs());
        (self - other).abs() <= scale * 1e-12
    }
}

/// Parses an exact rational from `p/q`, integer, or decimal notation.
pub fn parse_rat(text: &str) -> Result<Rat, String> {
    let s = text.trim();
    if s.is_empty() {
        return Err("empty number".to_string());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator in `{s}`"))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator in `{s}`"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in `{s}`"));
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.trim_start().starts_with('-');
        let int_digits = if int_part.is_empty() || int_part == "-" || int_part == "+" {
            "0".to_string()
        } else {
            int_part.to_string()
        };
        let i: BigInt = int_digits
            .parse()
            .map_err(|_| format!("bad number `{s}`"))?;
        if frac_part.is_empty() {
            return Ok(Rat::from_integer(i));
        }
        if !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(format!("bad number `{s}`"));
        }
        let f: BigInt = frac_part.parse().map_err(|_| format!("bad number `{s}`"))?;
        let den = BigInt::from(10u32).pow(frac_part.len() as u32);
        let frac = Rat::new(f, den);
        let int = Rat::from_integer(i);
        return Ok(if negative { int - frac } else { int + frac });
    }
    let i: BigInt = s.parse().map_err(|_| format!("bad number `{s}`"))?;
    Ok(Rat::from_integer(i))
}

/// Formats a rational canonically: `p` when integral, else `p/q`.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_decimals() {
        assert_eq!(parse_rat("3/4").unwrap(), Rat::from_ratio(3, 4));
        assert_eq!(parse_rat("-7").unwrap(), Rat::from_i64(-7));
        assert_eq!(parse_rat("2.5").unwrap(), Rat::from_ratio(5, 2));
        assert_eq!(parse_rat("-0.25").unwrap(), Rat::from_ratio(-1, 4));
        assert_eq!(parse_rat(".5").unwrap(), Rat::from_ratio(1, 2));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("abc").is_err());
    }

    #[test]
    fn formats_canonically() {
        assert_eq!(format_rat(&Rat::from_ratio(6, 4)), "3/2");
        assert_eq!(format_rat(&Rat::from_i64(5)), "5");
    }

    #[test]
    fn branch_eq_modes() {
        assert!(Rat::from_ratio(1, 3).branch_eq(&Rat::from_ratio(2, 6)));
        assert!(!Rat::from_ratio(1, 3).branch_eq(&Rat::from_ratio(1, 4)));
        assert!(1.0f64.branch_eq(&(1.0 + 1e-15)));
        assert!(!1.0f64.branch_eq(&1.001));
    }
}
