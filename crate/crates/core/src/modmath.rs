//! Word-sized modular arithmetic and group-instance validation.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Largest modulus accepted anywhere in the crate.
pub const MAX_MODULUS: u64 = 1 << 62;

/// Largest `q` accepted by [`validate_group`]; trial division stays cheap below it.
pub const MAX_GROUP_MODULUS: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModMathError {
    #[error("{value} is not an odd modulus >= 3")]
    NotOddModulus { value: u64 },
    #[error("modulus {value} exceeds 2^62")]
    ModulusTooLarge { value: u64 },
    #[error("{value} is not invertible modulo {modulus}")]
    NotInvertible { value: u64, modulus: u64 },
}

impl ModMathError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::NotOddModulus { .. } => "NotOddModulus",
            Self::ModulusTooLarge { .. } => "ModulusTooLarge",
            Self::NotInvertible { .. } => "NotInvertible",
        }
    }
}

/// Size of the cycle the walks run on: odd and at least 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct OddModulus(u64);

impl OddModulus {
    pub fn new(p: u64) -> Result<Self, ModMathError> {
        if p > MAX_MODULUS {
            return Err(ModMathError::ModulusTooLarge { value: p });
        }
        if p < 3 || p.is_multiple_of(2) {
            return Err(ModMathError::NotOddModulus { value: p });
        }
        Ok(Self(p))
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// The modulus as a `usize` index bound.
    #[inline]
    pub fn size(self) -> usize {
        self.0 as usize
    }

    /// `⌈log₂ p⌉`.
    pub fn ceil_log2(self) -> u32 {
        64 - (self.0 - 1).leading_zeros()
    }
}

impl TryFrom<u64> for OddModulus {
    type Error = ModMathError;
    fn try_from(p: u64) -> Result<Self, Self::Error> {
        Self::new(p)
    }
}

impl From<OddModulus> for u64 {
    fn from(p: OddModulus) -> u64 {
        p.0
    }
}

impl fmt::Display for OddModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[inline]
pub fn mod_mul(a: u64, b: u64, modulus: u64) -> u64 {
    ((a as u128 * b as u128) % modulus as u128) as u64
}

/// `base^exp mod modulus` by square-and-multiply. A modulus of 1 yields 0.
pub fn mod_pow(base: u64, mut exp: u64, modulus: u64) -> u64 {
    assert!(modulus >= 1, "modulus must be positive");
    if modulus == 1 {
        return 0;
    }
    let mut result = 1 % modulus;
    let mut b = base % modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mod_mul(result, b, modulus);
        }
        b = mod_mul(b, b, modulus);
        exp >>= 1;
    }
    result
}

/// Inverse of `a` modulo `p` via the extended Euclidean algorithm.
pub fn mod_inverse(a: u64, p: u64) -> Result<u64, ModMathError> {
    assert!(p >= 2, "modulus must be at least 2");
    let (mut old_r, mut r) = ((a % p) as i128, p as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(ModMathError::NotInvertible { value: a, modulus: p });
    }
    Ok(old_s.rem_euclid(p as i128) as u64)
}

/// Deterministic primality by trial division.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) || n.is_multiple_of(3) {
        return false;
    }
    let mut d = 5u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) || n.is_multiple_of(d + 2) {
            return false;
        }
        d += 6;
    }
    true
}

/// A discrete-log instance: `x` generates the order-`p` subgroup of `Z_q^*`
/// and `y = x^k` for the unknown `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupInstance {
    pub q: u64,
    pub p: u64,
    pub x: u64,
    pub y: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("QNotPrime: q = {0} is not prime")]
    QNotPrime(u64),
    #[error("QTooLarge: q = {0} exceeds 2^32")]
    QTooLarge(u64),
    #[error("PNotPrime: p = {0} is not an odd prime")]
    PNotPrime(u64),
    #[error("PDoesNotDivide: p = {p} does not divide q - 1 = {}", q - 1)]
    PDoesNotDivide { p: u64, q: u64 },
    #[error("GeneratorOutOfRange: x = {x} not in (1, {q})")]
    GeneratorOutOfRange { x: u64, q: u64 },
    #[error("GeneratorTrivial: x = 1 generates the trivial subgroup")]
    GeneratorTrivial,
    #[error("GeneratorOrder: x^p mod q = {0}, expected 1")]
    GeneratorOrder(u64),
    #[error("TargetOutOfRange: y = {y} not in [1, {q})")]
    TargetOutOfRange { y: u64, q: u64 },
    #[error("TargetNotInSubgroup: y^p mod q = {0}, expected 1")]
    TargetNotInSubgroup(u64),
}

impl GroupError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::QNotPrime(_) => "QNotPrime",
            Self::QTooLarge(_) => "QTooLarge",
            Self::PNotPrime(_) => "PNotPrime",
            Self::PDoesNotDivide { .. } => "PDoesNotDivide",
            Self::GeneratorOutOfRange { .. } => "GeneratorOutOfRange",
            Self::GeneratorTrivial => "GeneratorTrivial",
            Self::GeneratorOrder(_) => "GeneratorOrder",
            Self::TargetOutOfRange { .. } => "TargetOutOfRange",
            Self::TargetNotInSubgroup(_) => "TargetNotInSubgroup",
        }
    }
}

/// Checks every invariant of a [`GroupInstance`], reporting the first failure.
pub fn validate_group(inst: GroupInstance) -> Result<GroupInstance, GroupError> {
    let GroupInstance { q, p, x, y } = inst;
    if q > MAX_GROUP_MODULUS {
        return Err(GroupError::QTooLarge(q));
    }
    if !is_prime(q) {
        return Err(GroupError::QNotPrime(q));
    }
    if p == 2 || !is_prime(p) {
        return Err(GroupError::PNotPrime(p));
    }
    if (q - 1) % p != 0 {
        return Err(GroupError::PDoesNotDivide { p, q });
    }
    if x == 1 {
        return Err(GroupError::GeneratorTrivial);
    }
    if x == 0 || x >= q {
        return Err(GroupError::GeneratorOutOfRange { x, q });
    }
    let xp = mod_pow(x, p, q);
    if xp != 1 {
        return Err(GroupError::GeneratorOrder(xp));
    }
    if y == 0 || y >= q {
        return Err(GroupError::TargetOutOfRange { y, q });
    }
    let yp = mod_pow(y, p, q);
    if yp != 1 {
        return Err(GroupError::TargetNotInSubgroup(yp));
    }
    Ok(inst)
}
