//! Extended real numbers over `f64` with the total-cost conventions
//! `∞ − ∞ = −∞ + ∞ = +∞` and `0 · (±∞) = 0`.
//!
//! A NaN can never be stored: every constructor and operator either maps the
//! indeterminate forms onto the conventions above or rejects the input.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A value in `[-∞, +∞]`.
#[derive(Clone, Copy, Default)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal(0.0);
    pub const ONE: ExtReal = ExtReal(1.0);
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);
    pub const NEG_INFINITY: ExtReal = ExtReal(f64::NEG_INFINITY);

    /// Wraps a float. Panics on NaN.
    pub fn new(value: f64) -> Self {
        assert!(!value.is_nan(), "ExtReal cannot hold NaN");
        ExtReal(value)
    }

    /// Wraps a float, returning `None` on NaN.
    pub fn try_new(value: f64) -> Option<Self> {
        if value.is_nan() {
            None
        } else {
            Some(ExtReal(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    #[inline]
    pub fn is_pos_inf(self) -> bool {
        self.0 == f64::INFINITY
    }

    #[inline]
    pub fn is_neg_inf(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Distance `|a − b|` where equal infinities are at distance zero and
    /// any other pairing with an infinity is at distance `+∞`.
    pub fn dist(self, other: ExtReal) -> f64 {
        if self.0 == other.0 {
            0.0
        } else {
            (self.0 - other.0).abs()
        }
    }

    /// Scales by a finite real `c` under `0 · ∞ = 0`.
    pub fn scale(self, c: f64) -> ExtReal {
        self * ExtReal::new(c)
    }
}

impl From<f64> for ExtReal {
    fn from(value: f64) -> Self {
        ExtReal::new(value)
    }
}

impl From<ExtReal> for f64 {
    fn from(value: ExtReal) -> Self {
        value.0
    }
}

impl PartialEq for ExtReal {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        // NaN is unrepresentable, so the partial order is total.
        self.0.partial_cmp(&other.0).expect("ExtReal holds no NaN")
    }
}

impl PartialEq<f64> for ExtReal {
    fn eq(&self, other: &f64) -> bool {
        self.0 == *other
    }
}

impl PartialOrd<f64> for ExtReal {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.0.partial_cmp(other)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        if self.is_pos_inf() || rhs.is_pos_inf() {
            ExtReal::INFINITY
        } else {
            ExtReal(self.0 + rhs.0)
        }
    }
}

impl AddAssign for ExtReal {
    fn add_assign(&mut self, rhs: ExtReal) {
        *self = *self + rhs;
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;

    fn neg(self) -> ExtReal {
        ExtReal(-self.0)
    }
}

impl Sub for ExtReal {
    type Output = ExtReal;

    /// `a − b = a + (−b)`, so `∞ − ∞ = +∞` and `−∞ − (−∞) = +∞`.
    fn sub(self, rhs: ExtReal) -> ExtReal {
        self + (-rhs)
    }
}

impl Mul for ExtReal {
    type Output = ExtReal;

    fn mul(self, rhs: ExtReal) -> ExtReal {
        if self.0 == 0.0 || rhs.0 == 0.0 {
            ExtReal::ZERO
        } else {
            ExtReal(self.0 * rhs.0)
        }
    }
}

impl Mul<f64> for ExtReal {
    type Output = ExtReal;

    fn mul(self, rhs: f64) -> ExtReal {
        self * ExtReal::new(rhs)
    }
}

impl Sum for ExtReal {
    fn sum<I: Iterator<Item = ExtReal>>(iter: I) -> ExtReal {
        iter.fold(ExtReal::ZERO, |acc, x| acc + x)
    }
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pos_inf() {
            f.write_str("inf")
        } else if self.is_neg_inf() {
            f.write_str("-inf")
        } else {
            // `{}` on f64 prints the shortest string that round-trips.
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid extended real literal `{0}`")]
pub struct ParseExtRealError(pub String);

impl FromStr for ExtReal {
    type Err = ParseExtRealError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t {
            "inf" | "+inf" | "∞" | "+∞" | "Infinity" | "+Infinity" => Ok(ExtReal::INFINITY),
            "-inf" | "−inf" | "-∞" | "−∞" | "-Infinity" => Ok(ExtReal::NEG_INFINITY),
            _ => t
                .parse::<f64>()
                .ok()
                .and_then(ExtReal::try_new)
                .ok_or_else(|| ParseExtRealError(s.to_string())),
        }
    }
}

// Finite values serialize as numbers, infinities as the strings "inf"/"-inf"
// so that formats without an infinity literal (JSON) stay lossless.
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_finite() {
            serializer.serialize_f64(self.0)
        } else {
            serializer.serialize_str(if self.is_pos_inf() { "inf" } else { "-inf" })
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExtVisitor;

        impl Visitor<'_> for ExtVisitor {
            type Value = ExtReal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtReal, E> {
                ExtReal::try_new(v).ok_or_else(|| E::custom("NaN is not an extended real"))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(ExtVisitor)
    }
}

/// Serde adapter for plain `f64` fields that may hold infinities.
pub mod serde_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        ExtReal::try_new(*v).ok_or_else(|| serde::ser::Error::custom("NaN"))?.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(ExtReal::deserialize(d)?.value())
    }

    /// The same for `Option<f64>`.
    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Ok(Option::<ExtReal>::deserialize(d)?.map(ExtReal::value))
        }
    }
}

/// Sup-norm distance between two equally long slices of extended reals.
pub fn sup_dist(a: &[ExtReal], b: &[ExtReal]) -> f64 {
    assert_eq!(a.len(), b.len(), "sup_dist on slices of different length");
    a.iter()
        .zip(b)
        .map(|(x, y)| x.dist(*y))
        .fold(0.0, f64::max)
}
