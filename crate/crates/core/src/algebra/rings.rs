//! Finite commutative rings used as code alphabets.
//!
//! Elements are plain `u64` residues. Every ring here is local (a field or
//! `Z/p^eZ`), so each element is a unit times a power of the maximal ideal's
//! generator; [`FiniteRing::valuation`] and [`FiniteRing::div_exact`] expose
//! that structure for elimination.

use serde::{Deserialize, Serialize};

use super::primes::{inv_mod, is_prime};
use super::AlgebraError;

pub trait FiniteRing {
    fn size(&self) -> u64;
    /// Characteristic prime of the residue field.
    fn prime(&self) -> u64;
    fn add(&self, x: u64, y: u64) -> u64;
    fn neg(&self, x: u64) -> u64;
    fn mul(&self, x: u64, y: u64) -> u64;
    fn inv(&self, x: u64) -> Option<u64>;
    /// Power of the maximal ideal containing `x`; `None` for zero.
    fn valuation(&self, x: u64) -> Option<u32>;
    /// Some `y` with `d * y = x`, if one exists.
    fn div_exact(&self, x: u64, d: u64) -> Option<u64>;

    fn sub(&self, x: u64, y: u64) -> u64 {
        self.add(x, self.neg(y))
    }

    fn is_unit(&self, x: u64) -> bool {
        self.valuation(x) == Some(0)
    }

    /// Reduce an arbitrary integer into the ring through `Z -> R`.
    fn embed_int(&self, v: i64) -> u64;
}

/// The prime field `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, AlgebraError> {
        if !is_prime(p) {
            return Err(AlgebraError::NotPrime(p));
        }
        Ok(PrimeField { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }
}

impl FiniteRing for PrimeField {
    fn size(&self) -> u64 {
        self.p
    }
    fn prime(&self) -> u64 {
        self.p
    }
    fn add(&self, x: u64, y: u64) -> u64 {
        (x + y) % self.p
    }
    fn neg(&self, x: u64) -> u64 {
        (self.p - x % self.p) % self.p
    }
    fn mul(&self, x: u64, y: u64) -> u64 {
        ((x as u128 * y as u128) % self.p as u128) as u64
    }
    fn inv(&self, x: u64) -> Option<u64> {
        if x.is_multiple_of(self.p) {
            None
        } else {
            inv_mod(x, self.p)
        }
    }
    fn valuation(&self, x: u64) -> Option<u32> {
        (!x.is_multiple_of(self.p)).then_some(0)
    }
    fn div_exact(&self, x: u64, d: u64) -> Option<u64> {
        match self.inv(d) {
            Some(di) => Some(self.mul(x, di)),
            None => (x.is_multiple_of(self.p)).then_some(0),
        }
    }
    fn embed_int(&self, v: i64) -> u64 {
        v.rem_euclid(self.p as i64) as u64
    }
}

/// The finite chain ring `Z/p^eZ`. Its ideals are `p^k Z/p^eZ`, nested in a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainRing {
    p: u64,
    e: u32,
    modulus: u64,
}

impl ChainRing {
    pub fn new(p: u64, e: u32) -> Result<Self, AlgebraError> {
        if !is_prime(p) {
            return Err(AlgebraError::NotPrime(p));
        }
        if e == 0 {
            return Err(AlgebraError::ZeroExponent);
        }
        let modulus = p
            .checked_pow(e)
            .filter(|m| *m < (1 << 62))
            .ok_or(AlgebraError::Overflow)?;
        Ok(ChainRing { p, e, modulus })
    }

    pub fn exponent(&self) -> u32 {
        self.e
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_zero_divisor(&self, x: u64) -> bool {
        x.is_multiple_of(self.p)
    }
}

impl FiniteRing for ChainRing {
    fn size(&self) -> u64 {
        self.modulus
    }
    fn prime(&self) -> u64 {
        self.p
    }
    fn add(&self, x: u64, y: u64) -> u64 {
        (x + y) % self.modulus
    }
    fn neg(&self, x: u64) -> u64 {
        (self.modulus - x % self.modulus) % self.modulus
    }
    fn mul(&self, x: u64, y: u64) -> u64 {
        ((x as u128 * y as u128) % self.modulus as u128) as u64
    }
    fn inv(&self, x: u64) -> Option<u64> {
        if x.is_multiple_of(self.p) {
            None
        } else {
            inv_mod(x, self.modulus)
        }
    }
    fn valuation(&self, x: u64) -> Option<u32> {
        let mut x = x % self.modulus;
        if x == 0 {
            return None;
        }
        let mut v = 0;
        while x.is_multiple_of(self.p) {
            x /= self.p;
            v += 1;
        }
        Some(v)
    }
    fn div_exact(&self, x: u64, d: u64) -> Option<u64> {
        let x = x % self.modulus;
        let Some(vd) = self.valuation(d) else {
            return (x == 0).then_some(0);
        };
        let shift = self.p.pow(vd);
        if !x.is_multiple_of(shift) {
            return None;
        }
        let unit = (d % self.modulus) / shift;
        let unit_inv = inv_mod(unit, self.modulus)?;
        Some(self.mul(x / shift, unit_inv))
    }
    fn embed_int(&self, v: i64) -> u64 {
        v.rem_euclid(self.modulus as i64) as u64
    }
}

/// `F_{p^2}` realised as `F_p[x]/(x^2 - t x + n)`. Element `a + b x` is stored
/// as the index `a + b p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExtensionField {
    p: u64,
    trace: u64,
    norm: u64,
}

impl ExtensionField {
    /// Requires `x^2 - trace x + norm` to be irreducible over `F_p`.
    pub fn new(p: u64, trace: i64, norm: i64) -> Result<Self, AlgebraError> {
        if !is_prime(p) {
            return Err(AlgebraError::NotPrime(p));
        }
        let pi = p as i64;
        let (t, n) = (trace.rem_euclid(pi) as u64, norm.rem_euclid(pi) as u64);
        let has_root = (0..p).any(|x| {
            let v = (x as u128 * x as u128 + (p - t) as u128 * x as u128 + n as u128) % p as u128;
            v == 0
        });
        if has_root {
            return Err(AlgebraError::Reducible { p, trace, norm });
        }
        Ok(ExtensionField {
            p,
            trace: t,
            norm: n,
        })
    }

    pub fn split(&self, x: u64) -> (u64, u64) {
        (x % self.p, x / self.p)
    }

    pub fn join(&self, a: u64, b: u64) -> u64 {
        a % self.p + (b % self.p) * self.p
    }

    /// Coefficients `(trace, norm)` of the defining polynomial.
    pub fn polynomial(&self) -> (u64, u64) {
        (self.trace, self.norm)
    }
}

impl FiniteRing for ExtensionField {
    fn size(&self) -> u64 {
        self.p * self.p
    }
    fn prime(&self) -> u64 {
        self.p
    }
    fn add(&self, x: u64, y: u64) -> u64 {
        let ((a, b), (c, d)) = (self.split(x), self.split(y));
        self.join((a + c) % self.p, (b + d) % self.p)
    }
    fn neg(&self, x: u64) -> u64 {
        let (a, b) = self.split(x);
        self.join((self.p - a) % self.p, (self.p - b) % self.p)
    }
    fn mul(&self, x: u64, y: u64) -> u64 {
        let p = self.p as u128;
        let ((a, b), (c, d)) = (self.split(x), self.split(y));
        let (a, b, c, d) = (a as u128, b as u128, c as u128, d as u128);
        let (t, n) = (self.trace as u128, self.norm as u128);
        // x^2 = t x - n
        let bd = b * d % p;
        let constant = (a * c + (p - n) * bd) % p;
        let linear = (a * d + b * c + t * bd) % p;
        self.join(constant as u64, linear as u64)
    }
    fn inv(&self, x: u64) -> Option<u64> {
        if x == 0 {
            return None;
        }
        let p = self.p as u128;
        let (a, b) = self.split(x);
        let (a, b) = (a as u128, b as u128);
        let (t, n) = (self.trace as u128, self.norm as u128);
        // (a + b x)((a + b t) - b x) = a^2 + t a b + n b^2
        let norm = (a * a + t * a % p * b + n * b % p * b) % p;
        let norm_inv = inv_mod(norm as u64, self.p)? as u128;
        let conj_a = (a + b * t) % p;
        let conj_b = (p - b) % p;
        Some(self.join(
            (conj_a * norm_inv % p) as u64,
            (conj_b * norm_inv % p) as u64,
        ))
    }
    fn valuation(&self, x: u64) -> Option<u32> {
        (x != 0).then_some(0)
    }
    fn div_exact(&self, x: u64, d: u64) -> Option<u64> {
        match self.inv(d) {
            Some(di) => Some(self.mul(x, di)),
            None => (x == 0).then_some(0),
        }
    }
    fn embed_int(&self, v: i64) -> u64 {
        v.rem_euclid(self.p as i64) as u64
    }
}

/// A code alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Alphabet {
    Prime(PrimeField),
    Chain(ChainRing),
    Extension(ExtensionField),
}

impl Alphabet {
    /// `Z/p^eZ`, normalised to a prime field when `e = 1`.
    pub fn integers_mod(p: u64, e: u32) -> Result<Self, AlgebraError> {
        if e == 1 {
            Ok(Alphabet::Prime(PrimeField::new(p)?))
        } else {
            Ok(Alphabet::Chain(ChainRing::new(p, e)?))
        }
    }

    pub fn is_field(&self) -> bool {
        !matches!(self, Alphabet::Chain(_))
    }

    /// `(p, e)` when the alphabet is `Z/p^eZ`.
    pub fn prime_power(&self) -> Option<(u64, u32)> {
        match self {
            Alphabet::Prime(f) => Some((f.modulus(), 1)),
            Alphabet::Chain(r) => Some((r.prime(), r.exponent())),
            Alphabet::Extension(_) => None,
        }
    }

    fn inner(&self) -> &dyn FiniteRing {
        match self {
            Alphabet::Prime(f) => f,
            Alphabet::Chain(r) => r,
            Alphabet::Extension(f) => f,
        }
    }
}

impl FiniteRing for Alphabet {
    fn size(&self) -> u64 {
        self.inner().size()
    }
    fn prime(&self) -> u64 {
        self.inner().prime()
    }
    fn add(&self, x: u64, y: u64) -> u64 {
        self.inner().add(x, y)
    }
    fn neg(&self, x: u64) -> u64 {
        self.inner().neg(x)
    }
    fn mul(&self, x: u64, y: u64) -> u64 {
        self.inner().mul(x, y)
    }
    fn inv(&self, x: u64) -> Option<u64> {
        self.inner().inv(x)
    }
    fn valuation(&self, x: u64) -> Option<u32> {
        self.inner().valuation(x)
    }
    fn div_exact(&self, x: u64, d: u64) -> Option<u64> {
        self.inner().div_exact(x, d)
    }
    fn embed_int(&self, v: i64) -> u64 {
        self.inner().embed_int(v)
    }
}
