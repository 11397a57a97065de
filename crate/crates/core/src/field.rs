//! Prime-field arithmetic over moduli below 2^63.
//!
//! Every share, coefficient and encoded ballot lives in a [`FieldElement`]
//! bound to a [`FieldPrime`]. Elements of different fields never mix; the
//! binary operations return [`FieldError::MismatchedField`] instead.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest modulus (exclusive) supported by the field.
pub const MAX_PRIME_EXCLUSIVE: u64 = 1 << 63;

/// Largest bound (exclusive) accepted by [`next_prime_above`].
pub const MAX_PRIME_SEARCH_BOUND: u64 = 1 << 62;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not a prime in [3, 2^63)")]
    NotPrime(u64),
    #[error("operands belong to different fields (p={left} vs p={right})")]
    MismatchedField { left: u64, right: u64 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("cannot evaluate an empty polynomial")]
    EmptyPolynomial,
    #[error("prime search bound {0} is outside [2, 2^62)")]
    BoundTooLarge(u64),
}

/// A prime modulus `p` with `3 <= p < 2^63`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct FieldPrime(u64);

impl FieldPrime {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if (3..MAX_PRIME_EXCLUSIVE).contains(&p) && is_prime(p) {
            Ok(FieldPrime(p))
        } else {
            Err(FieldError::NotPrime(p))
        }
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// Reduces `value` into this field.
    pub fn element(self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.0,
            prime: self,
        }
    }

    pub fn zero(self) -> FieldElement {
        self.element(0)
    }

    pub fn one(self) -> FieldElement {
        self.element(1)
    }
}

impl TryFrom<u64> for FieldPrime {
    type Error = FieldError;

    fn try_from(p: u64) -> Result<Self, Self::Error> {
        FieldPrime::new(p)
    }
}

impl From<FieldPrime> for u64 {
    fn from(p: FieldPrime) -> u64 {
        p.0
    }
}

impl fmt::Display for FieldPrime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An integer in `[0, p)` tagged with its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    prime: FieldPrime,
}

impl FieldElement {
    pub fn value(self) -> u64 {
        self.value
    }

    pub fn prime(self) -> FieldPrime {
        self.prime
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn same_field(self, other: FieldElement) -> Result<u64, FieldError> {
        if self.prime == other.prime {
            Ok(self.prime.0)
        } else {
            Err(FieldError::MismatchedField {
                left: self.prime.0,
                right: other.prime.0,
            })
        }
    }

    pub fn try_add(self, rhs: FieldElement) -> Result<FieldElement, FieldError> {
        let p = self.same_field(rhs)?;
        // p < 2^63, so the sum fits in a u64.
        let sum = self.value + rhs.value;
        Ok(FieldElement {
            value: if sum >= p { sum - p } else { sum },
            prime: self.prime,
        })
    }

    pub fn try_sub(self, rhs: FieldElement) -> Result<FieldElement, FieldError> {
        self.same_field(rhs)?;
        self.try_add(-rhs)
    }

    pub fn try_mul(self, rhs: FieldElement) -> Result<FieldElement, FieldError> {
        let p = self.same_field(rhs)?;
        Ok(FieldElement {
            value: mul_mod(self.value, rhs.value, p),
            prime: self.prime,
        })
    }

    pub fn pow(self, exp: u64) -> FieldElement {
        FieldElement {
            value: pow_mod(self.value, exp, self.prime.0),
            prime: self.prime,
        }
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(self) -> Result<FieldElement, FieldError> {
        if self.value == 0 {
            return Err(FieldError::ZeroInverse);
        }
        Ok(self.pow(self.prime.0 - 2))
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl std::ops::Neg for FieldElement {
    type Output = FieldElement;

    fn neg(self) -> FieldElement {
        let p = self.prime.0;
        FieldElement {
            value: if self.value == 0 { 0 } else { p - self.value },
            prime: self.prime,
        }
    }
}

/// Evaluates `coeffs[0] + coeffs[1]·x + …` with Horner's rule.
pub fn poly_eval(coeffs: &[FieldElement], x: FieldElement) -> Result<FieldElement, FieldError> {
    let (last, rest) = coeffs.split_last().ok_or(FieldError::EmptyPolynomial)?;
    rest.iter()
        .rev()
        .try_fold(*last, |acc, c| acc.try_mul(x)?.try_add(*c))
}

/// Smallest prime strictly greater than `bound`.
pub fn next_prime_above(bound: u64) -> Result<FieldPrime, FieldError> {
    if !(2..MAX_PRIME_SEARCH_BOUND).contains(&bound) {
        return Err(FieldError::BoundTooLarge(bound));
    }
    let mut candidate = bound + 1;
    if candidate > 3 && candidate.is_multiple_of(2) {
        candidate += 1;
    }
    loop {
        if is_prime(candidate) {
            return FieldPrime::new(candidate);
        }
        candidate += 2;
    }
}

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the first twelve prime bases are exact for all n < 2^64.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
