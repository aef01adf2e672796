//! Reals carried with an exact rational shadow when one is known.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Q = Ratio<i128>;

#[derive(Clone, Copy, Debug)]
pub struct Real {
    value: f64,
    exact: Option<Q>,
}

/// Float comparisons closer than this are reported as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

impl Real {
    pub fn from_ratio(q: Q) -> Self {
        Self { value: q.to_f64().unwrap_or(f64::NAN), exact: Some(q) }
    }

    pub fn int(n: i64) -> Self {
        Self::from_ratio(Q::from_integer(n as i128))
    }

    pub fn frac(p: i64, q: i64) -> Self {
        Self::from_ratio(Q::new(p as i128, q as i128))
    }

    /// Float-only value.
    pub fn inexact(value: f64) -> Self {
        Self { value, exact: None }
    }

    /// Exact when the shortest decimal rendering of `x` is a short rational.
    pub fn from_f64(x: f64) -> Self {
        if !x.is_finite() {
            return Self::inexact(x);
        }
        match parse_decimal(&format!("{x}")) {
            Some(q) => Self { value: x, exact: Some(q) },
            None => Self::inexact(x),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<Q> {
        self.exact
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn is_zero(&self) -> bool {
        match self.exact {
            Some(q) => q.is_zero(),
            None => self.value == 0.0,
        }
    }

    fn lift(
        self,
        other: Real,
        f: fn(f64, f64) -> f64,
        g: fn(&Q, &Q) -> Option<Q>,
    ) -> Real {
        let exact = match (self.exact, other.exact) {
            (Some(a), Some(b)) => g(&a, &b),
            _ => None,
        };
        match exact {
            Some(q) => Real::from_ratio(q),
            None => Real::inexact(f(self.value, other.value)),
        }
    }

    pub fn add(self, o: Real) -> Real {
        self.lift(o, |a, b| a + b, |a, b| a.checked_add(b))
    }

    pub fn sub(self, o: Real) -> Real {
        self.lift(o, |a, b| a - b, |a, b| a.checked_sub(b))
    }

    pub fn mul(self, o: Real) -> Real {
        self.lift(o, |a, b| a * b, |a, b| a.checked_mul(b))
    }

    pub fn div(self, o: Real) -> Result<Real> {
        if o.is_zero() {
            return Err(Error::Domain("division by zero".into()));
        }
        Ok(self.lift(o, |a, b| a / b, |a, b| a.checked_div(b)))
    }

    pub fn neg(self) -> Real {
        Real { value: -self.value, exact: self.exact.map(|q| -q) }
    }

    pub fn abs(self) -> Real {
        Real { value: self.value.abs(), exact: self.exact.map(|q| q.abs()) }
    }

    /// Exact comparison when both sides are exact, otherwise a float
    /// comparison with `TIE_TOLERANCE`; `None` marks an unresolved near-tie.
    pub fn compare(&self, other: &Real) -> Option<Ordering> {
        match (self.exact, other.exact) {
            (Some(a), Some(b)) => Some(a.cmp(&b)),
            _ => {
                let d = self.value - other.value;
                if d.abs() <= TIE_TOLERANCE {
                    None
                } else if d > 0.0 {
                    Some(Ordering::Greater)
                } else {
                    Some(Ordering::Less)
                }
            }
        }
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        match (self.exact, other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => self.value == other.value,
        }
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(q) if q.is_integer() => write!(f, "{}", q.numer()),
            Some(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            None => write!(f, "{}", self.value),
        }
    }
}

fn parse_decimal(s: &str) -> Option<Q> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    let trimmed = all.trim_start_matches('0');
    if trimmed.len() > 30 {
        return None;
    }
    let n: i128 = if trimmed.is_empty() { 0 } else { trimmed.parse().ok()? };
    let scale = exp - frac_part.len() as i32;
    let ten = |k: u32| 10i128.checked_pow(k);
    let q = if scale >= 0 {
        Q::from_integer(n.checked_mul(ten(scale as u32)?)?)
    } else {
        Q::new(n, ten((-scale) as u32)?)
    };
    Some(if neg { -q } else { q })
}

impl FromStr for Real {
    type Err = Error;

    /// Accepts decimals (`1.5`, `-2e-3`), fractions (`3/4`) and, as a float
    /// fallback, anything `f64` parses.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let (p, q) = (parse_decimal(p), parse_decimal(q));
            return match (p, q) {
                (Some(p), Some(q)) if !q.is_zero() => Ok(Real::from_ratio(p / q)),
                _ => Err(Error::Domain(format!("bad fraction {s:?}"))),
            };
        }
        if let Some(q) = parse_decimal(s) {
            return Ok(Real::from_ratio(q));
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Real::inexact)
            .ok_or_else(|| Error::Domain(format!("not a number: {s:?}")))
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            S(String),
            F(f64),
        }
        match Repr::deserialize(d)? {
            Repr::S(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::F(x) => Ok(Real::from_f64(x)),
        }
    }
}

impl From<i64> for Real {
    fn from(n: i64) -> Self {
        Real::int(n)
    }
}

impl Default for Real {
    fn default() -> Self {
        Real::int(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_and_fractions() {
        let a: Real = "1.5".parse().unwrap();
        assert_eq!(a.exact(), Some(Q::new(3, 2)));
        let b: Real = "-2.5e-3".parse().unwrap();
        assert_eq!(b.exact(), Some(Q::new(-1, 400)));
        let c: Real = "3/4".parse().unwrap();
        assert_eq!(c.exact(), Some(Q::new(3, 4)));
        assert!("abc".parse::<Real>().is_err());
        assert!("1/0".parse::<Real>().is_err());
    }

    #[test]
    fn from_f64_uses_shortest_decimal() {
        assert_eq!(Real::from_f64(0.1).exact(), Some(Q::new(1, 10)));
        assert_eq!(Real::from_f64(1e-300).exact(), None);
    }

    #[test]
    fn exact_arithmetic_and_ties() {
        let c = Real::frac(1, 2).div(Real::frac(1, 4)).unwrap();
        assert_eq!(c.exact(), Some(Q::from_integer(2)));
        let one = Real::int(1);
        assert_eq!(c.mul(Real::frac(1, 2)).compare(&one), Some(Ordering::Equal));
        assert_eq!(Real::inexact(1.0 + 1e-12).compare(&one), None);
        assert_eq!(Real::inexact(1.1).compare(&one), Some(Ordering::Greater));
        assert!(one.div(Real::int(0)).is_err());
    }

    #[test]
    fn overflow_falls_back_to_float() {
        let big = Real::from_ratio(Q::from_integer(i128::MAX / 2));
        let p = big.mul(big);
        assert!(!p.is_exact());
        assert!(p.value() > 1e70);
    }

    #[test]
    fn serde_round_trip() {
        let r = Real::frac(-7, 3);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, "\"-7/3\"");
        let back: Real = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        let f: Real = serde_json::from_str("0.25").unwrap();
        assert_eq!(f.exact(), Some(Q::new(1, 4)));
    }
}
