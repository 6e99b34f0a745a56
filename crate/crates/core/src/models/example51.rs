//! A countable-state model on which value iteration needs transfinitely
//! many rounds.
//!
//! States are `0, 1, 2, …`. From state 0 the control picks any successor
//! `u ≥ 1`; from `x ≥ 1` the successor is `x − 1`. The one-stage cost is 1
//! at state 1 and 0 elsewhere, so
//! `T(J)(0) = inf_{x ≥ 1} J(x)` and `T(J)(x) = [x = 1] + J(x − 1)`.
//! Value functions reached from `0` are eventually constant, which lets the
//! whole countable model be handled exactly with [`TailConstantVector`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use crate::error::{Error, Result};

/// `ℕ ∪ {∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtNat {
    Fin(u64),
    Inf,
}

impl ExtNat {
    pub const ZERO: ExtNat = ExtNat::Fin(0);
}

impl PartialOrd for ExtNat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtNat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtNat::Fin(a), ExtNat::Fin(b)) => a.cmp(b),
            (ExtNat::Fin(_), ExtNat::Inf) => Ordering::Less,
            (ExtNat::Inf, ExtNat::Fin(_)) => Ordering::Greater,
            (ExtNat::Inf, ExtNat::Inf) => Ordering::Equal,
        }
    }
}

impl Add for ExtNat {
    type Output = ExtNat;

    fn add(self, rhs: ExtNat) -> ExtNat {
        match (self, rhs) {
            (ExtNat::Fin(a), ExtNat::Fin(b)) => ExtNat::Fin(a + b),
            _ => ExtNat::Inf,
        }
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Fin(v) => write!(f, "{v}"),
            ExtNat::Inf => f.write_str("inf"),
        }
    }
}

/// A function on `ℕ` given by a finite prefix and a constant tail, stored
/// canonically (the last prefix entry differs from the tail).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TailConstantVector {
    prefix: Vec<ExtNat>,
    tail: ExtNat,
}

impl TailConstantVector {
    pub fn new(prefix: Vec<ExtNat>, tail: ExtNat) -> Self {
        let mut v = TailConstantVector { prefix, tail };
        while v.prefix.last() == Some(&v.tail) {
            v.prefix.pop();
        }
        v
    }

    pub fn from_u64(prefix: &[u64], tail: u64) -> Self {
        Self::new(prefix.iter().map(|&v| ExtNat::Fin(v)).collect(), ExtNat::Fin(tail))
    }

    pub fn constant(v: ExtNat) -> Self {
        TailConstantVector { prefix: Vec::new(), tail: v }
    }

    pub fn zero() -> Self {
        Self::constant(ExtNat::ZERO)
    }

    pub fn prefix(&self) -> &[ExtNat] {
        &self.prefix
    }

    pub fn tail(&self) -> ExtNat {
        self.tail
    }

    pub fn get(&self, x: usize) -> ExtNat {
        self.prefix.get(x).copied().unwrap_or(self.tail)
    }

    /// Adds a constant to every entry.
    pub fn plus(&self, c: u64) -> Self {
        let c = ExtNat::Fin(c);
        Self::new(self.prefix.iter().map(|&v| v + c).collect(), self.tail + c)
    }
}

impl fmt::Display for TailConstantVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for v in &self.prefix {
            write!(f, "{v}, ")?;
        }
        write!(f, "{}, {}, …)", self.tail, self.tail)
    }
}

/// The Bellman operator of the model, exactly.
pub fn example51_t(j: &TailConstantVector) -> TailConstantVector {
    let at_zero = j.prefix.iter().skip(1).copied().fold(j.tail, ExtNat::min);
    let len = (j.prefix.len() + 1).max(2);
    let mut prefix = Vec::with_capacity(len);
    prefix.push(at_zero);
    for x in 1..len {
        let stage = ExtNat::Fin(u64::from(x == 1));
        prefix.push(stage + j.get(x - 1));
    }
    TailConstantVector::new(prefix, j.tail)
}

/// `lim_k T^k(start)`, detected either as an exact fixed point or as the
/// propagation pattern in which each step appends one more copy of the
/// last prefix value `c` in front of an unchanged tail; the limit then
/// replaces the tail by `c`.
pub fn example51_limit(start: &TailConstantVector, inner_cap: usize) -> Result<TailConstantVector> {
    let mut prev = start.clone();
    for _ in 0..inner_cap {
        let next = example51_t(&prev);
        if next == prev {
            return Ok(next);
        }
        let grows_by_one = next.tail == prev.tail
            && prev.prefix.len() >= 2
            && next.prefix.len() == prev.prefix.len() + 1
            && next.prefix[..prev.prefix.len()] == prev.prefix[..]
            && next.prefix.last() == prev.prefix.last();
        if grows_by_one {
            let c = *prev.prefix.last().unwrap();
            return Ok(TailConstantVector::new(prev.prefix, c));
        }
        prev = next;
    }
    Err(Error::IterationCap {
        iterations: inner_cap,
        residual: f64::NAN,
        bound: crate::error::BoundSide::Lower,
        last: Vec::new(),
    })
}

/// `J_{∞m}`: `J_{∞0} = lim T^k(0)` and `J_{∞(m+1)} = lim T^k(J_{∞m})`.
pub fn example51_transfinite_level(m: usize, inner_cap: usize) -> Result<TailConstantVector> {
    let mut j = example51_limit(&TailConstantVector::zero(), inner_cap)?;
    for _ in 0..m {
        j = example51_limit(&j, inner_cap)?;
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iterates_from_zero_have_k_ones() {
        let mut j = TailConstantVector::zero();
        for k in 1..=8 {
            j = example51_t(&j);
            let mut expect = vec![0];
            expect.extend(std::iter::repeat_n(1, k));
            assert_eq!(j, TailConstantVector::from_u64(&expect, 0), "k = {k}");
        }
    }

    #[test]
    fn all_infinite_is_fixed() {
        let inf = TailConstantVector::constant(ExtNat::Inf);
        assert_eq!(example51_t(&inf), inf);
    }

    #[test]
    fn first_levels() {
        assert_eq!(example51_transfinite_level(0, 100).unwrap(), TailConstantVector::from_u64(&[0], 1));
        assert_eq!(example51_transfinite_level(1, 100).unwrap(), TailConstantVector::from_u64(&[1], 2));
        assert_eq!(example51_transfinite_level(5, 100).unwrap(), TailConstantVector::from_u64(&[5], 6));
    }

    #[test]
    fn canonical_form() {
        let v = TailConstantVector::from_u64(&[1, 2, 2], 2);
        assert_eq!(v.prefix(), &[ExtNat::Fin(1)]);
        assert_eq!(v.get(7), ExtNat::Fin(2));
        assert_eq!(v.to_string(), "(1, 2, 2, …)");
    }

    #[test]
    fn cap_is_reported() {
        assert!(example51_limit(&TailConstantVector::zero(), 1).is_err());
    }
}
