//! Dual-mode scalars: exact rationals with arbitrary precision, or `f64`.
//!
//! Exact arithmetic is closed: combining two exact values never silently
//! drops to floating point. Mixing an exact value with a float promotes the
//! result to `f64`; `Scalar::is_exact` lets callers observe whether a chain
//! of operations stayed exact.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Signed, ToPrimitive, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A number that is either an exact rational or a binary `f64`.
#[derive(Clone, Debug)]
pub enum Scalar {
    /// Arbitrary-precision rational.
    Exact(BigRational),
    /// IEEE 754 double.
    F64(f64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact p/q. Panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Scalar::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_f64(x: f64) -> Self {
        Scalar::F64(x)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::F64(x) => *x == 0.0,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::F64(x) => *x,
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
            Scalar::F64(x) => Scalar::F64(x.abs()),
        }
    }

    /// Demote to float mode, keeping the value.
    pub fn demote(&self) -> Scalar {
        Scalar::F64(self.to_f64())
    }

    /// Square root. Stays exact only when numerator and denominator are both
    /// perfect squares; otherwise the result is a float (the caller can see
    /// the promotion through `is_exact`). Negative input returns `None`.
    pub fn sqrt(&self) -> Option<Scalar> {
        match self {
            Scalar::Exact(r) => {
                match r.numer().sign() {
                    num::bigint::Sign::Minus => return None,
                    num::bigint::Sign::NoSign => return Some(Scalar::zero()),
                    num::bigint::Sign::Plus => {}
                }
                let (n, d) = (r.numer(), r.denom());
                let sn = n.sqrt();
                let sd = d.sqrt();
                if &(&sn * &sn) == n && &(&sd * &sd) == d {
                    Some(Scalar::Exact(BigRational::new(sn, sd)))
                } else {
                    Some(Scalar::F64(r.to_f64()?.sqrt()))
                }
            }
            Scalar::F64(x) => {
                if *x < 0.0 {
                    None
                } else {
                    Some(Scalar::F64(x.sqrt()))
                }
            }
        }
    }

    /// Exact division when both operands are exact; float otherwise.
    /// Returns `None` on division by zero.
    pub fn checked_div(&self, other: &Scalar) -> Option<Scalar> {
        if other.is_zero() {
            return None;
        }
        Some(match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a / b),
            _ => Scalar::F64(self.to_f64() / other.to_f64()),
        })
    }

    pub fn mul_int(&self, k: i64) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r * BigRational::from_integer(BigInt::from(k))),
            Scalar::F64(x) => Scalar::F64(x * k as f64),
        }
    }

    /// Parse "p/q", an integer, or a decimal literal.
    pub fn parse(s: &str) -> Option<Scalar> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p = BigInt::from_str(p.trim()).ok()?;
            let q = BigInt::from_str(q.trim()).ok()?;
            if q.is_zero() {
                return None;
            }
            return Some(Scalar::Exact(BigRational::new(p, q)));
        }
        if let Ok(n) = BigInt::from_str(s) {
            return Some(Scalar::Exact(BigRational::from_integer(n)));
        }
        s.parse::<f64>().ok().map(Scalar::F64)
    }
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.partial_cmp(b),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &Scalar {
            type Output = Scalar;
            fn $method(self, other: &Scalar) -> Scalar {
                match (self, other) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    _ => Scalar::F64(self.to_f64() $op other.to_f64()),
                }
            }
        }
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, other: Scalar) -> Scalar {
                (&self).$method(&other)
            }
        }
    };
}

scalar_binop!(Add, add, +);
scalar_binop!(Sub, sub, -);
scalar_binop!(Mul, mul, *);

impl Div for &Scalar {
    type Output = Scalar;
    fn div(self, other: &Scalar) -> Scalar {
        self.checked_div(other)
            .unwrap_or_else(|| Scalar::F64(self.to_f64() / other.to_f64()))
    }
}

impl Div for Scalar {
    type Output = Scalar;
    fn div(self, other: Scalar) -> Scalar {
        (&self).div(&other)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::F64(x) => Scalar::F64(-x),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        (&self).neg()
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, other: Scalar) {
        *self = &*self + &other;
    }
}

impl SubAssign for Scalar {
    fn sub_assign(&mut self, other: Scalar) {
        *self = &*self - &other;
    }
}

impl MulAssign for Scalar {
    fn mul_assign(&mut self, other: Scalar) {
        *self = &*self * &other;
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::F64(x) => write!(f, "{x}"),
        }
    }
}

/// JSON form: exact integers as numbers, other rationals as "p/q" strings,
/// floats as numbers. Integers parse back as exact values.
impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(r) => {
                if r.is_integer() {
                    if let Some(n) = r.numer().to_i64() {
                        return serializer.serialize_i64(n);
                    }
                }
                serializer.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
            }
            Scalar::F64(x) => serializer.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(deserializer)?;
        match v {
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Scalar::from_int(i))
                } else if let Some(x) = n.as_f64() {
                    Ok(Scalar::F64(x))
                } else {
                    Err(D::Error::custom("unrepresentable number"))
                }
            }
            serde_json::Value::String(s) => {
                Scalar::parse(&s).ok_or_else(|| D::Error::custom(format!("bad scalar `{s}`")))
            }
            other => Err(D::Error::custom(format!("expected number or \"p/q\", got {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_ops_stay_exact() {
        let a = Scalar::ratio(1, 3);
        let b = Scalar::ratio(1, 6);
        let s = &a + &b;
        assert!(s.is_exact());
        assert_eq!(s, Scalar::ratio(1, 2));
    }

    #[test]
    fn mixed_mode_promotes() {
        let a = Scalar::ratio(1, 3);
        let b = Scalar::from_f64(0.5);
        let s = &a * &b;
        assert!(!s.is_exact());
        assert!((s.to_f64() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn sqrt_perfect_square_is_exact() {
        let s = Scalar::ratio(9, 4).sqrt().unwrap();
        assert!(s.is_exact());
        assert_eq!(s, Scalar::ratio(3, 2));
        let t = Scalar::from_int(2).sqrt().unwrap();
        assert!(!t.is_exact());
        assert!((t.to_f64() - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!(Scalar::from_int(-1).sqrt().is_none());
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["3", "-7/2", "0", "1/3"] {
            let v = Scalar::parse(s).unwrap();
            assert!(v.is_exact());
            assert_eq!(format!("{v}"), s);
        }
        assert!(!Scalar::parse("0.25").unwrap().is_exact());
        assert!(Scalar::parse("1/0").is_none());
    }

    #[test]
    fn json_round_trip() {
        let vals = vec![Scalar::from_int(5), Scalar::ratio(-3, 8), Scalar::from_f64(0.125)];
        let js = serde_json::to_string(&vals).unwrap();
        let back: Vec<Scalar> = serde_json::from_str(&js).unwrap();
        assert_eq!(vals, back);
        assert!(back[0].is_exact() && back[1].is_exact() && !back[2].is_exact());
    }
}
