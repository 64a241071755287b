//! The CRT isomorphism between `×_l Z/p_l^{e_l}Z` and `Z/qZ`.

use serde::{Deserialize, Serialize};

use super::primes::{factorize, inv_mod, prime_power};
use super::AlgebraError;

/// Ring isomorphism `M: ×_l Z/m_l Z -> Z/qZ` for pairwise-coprime prime powers
/// `m_l`, together with `σ = M⁻¹ ∘ (mod q)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CrtMapRepr", into = "CrtMapRepr")]
pub struct CrtMap {
    factors: Vec<(u64, u32)>,
    moduli: Vec<u64>,
    q: u64,
    // idempotents: basis[l] ≡ 1 mod m_l and ≡ 0 mod m_j for j != l
    basis: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct CrtMapRepr {
    moduli: Vec<u64>,
}

impl TryFrom<CrtMapRepr> for CrtMap {
    type Error = AlgebraError;
    fn try_from(r: CrtMapRepr) -> Result<Self, Self::Error> {
        CrtMap::new(&r.moduli)
    }
}

impl From<CrtMap> for CrtMapRepr {
    fn from(m: CrtMap) -> Self {
        CrtMapRepr { moduli: m.moduli }
    }
}

impl CrtMap {
    /// Builds the map for the given prime-power moduli, kept in the given order.
    pub fn new(moduli: &[u64]) -> Result<Self, AlgebraError> {
        if moduli.is_empty() {
            return Err(AlgebraError::EmptyModuli);
        }
        let mut factors = Vec::with_capacity(moduli.len());
        for &m in moduli {
            let (p, e) = prime_power(m).ok_or(AlgebraError::NotPrimePower(m))?;
            if factors.iter().any(|&(r, _)| r == p) {
                return Err(AlgebraError::RepeatedPrime(p));
            }
            factors.push((p, e));
        }
        let q = moduli
            .iter()
            .try_fold(1u64, |acc, &m| acc.checked_mul(m))
            .filter(|q| *q < (1 << 62))
            .ok_or(AlgebraError::Overflow)?;
        let basis = moduli
            .iter()
            .map(|&m| {
                let rest = q / m;
                let inv = inv_mod(rest % m, m).expect("moduli are coprime");
                ((rest as u128 * inv as u128) % q as u128) as u64
            })
            .collect();
        Ok(CrtMap {
            factors,
            moduli: moduli.to_vec(),
            q,
            basis,
        })
    }

    /// The map for the prime factorization of `q`, primes ascending.
    pub fn from_modulus(q: u64) -> Result<Self, AlgebraError> {
        if q < 2 {
            return Err(AlgebraError::ModulusTooSmall(q));
        }
        let moduli: Vec<u64> = factorize(q).iter().map(|&(p, e)| p.pow(e)).collect();
        Self::new(&moduli)
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    /// `(p_l, e_l)` per level.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn levels(&self) -> usize {
        self.moduli.len()
    }

    /// `M`: the unique residue in `[0, q)` reducing to each coordinate.
    pub fn forward(&self, coords: &[u64]) -> Result<u64, AlgebraError> {
        if coords.len() != self.moduli.len() {
            return Err(AlgebraError::ArityMismatch {
                expected: self.moduli.len(),
                got: coords.len(),
            });
        }
        let q = self.q as u128;
        let acc = coords
            .iter()
            .zip(&self.moduli)
            .zip(&self.basis)
            .fold(0u128, |acc, ((&c, &m), &b)| {
                (acc + (c % m) as u128 * b as u128) % q
            });
        Ok(acc as u64)
    }

    /// `σ(a)`: componentwise reduction of any integer.
    pub fn sigma(&self, a: i64) -> Vec<u64> {
        self.moduli
            .iter()
            .map(|&m| (a as i128).rem_euclid(m as i128) as u64)
            .collect()
    }

    /// Level-`l` coordinate of `σ(a)`.
    pub fn sigma_level(&self, a: i64, level: usize) -> u64 {
        (a as i128).rem_euclid(self.moduli[level] as i128) as u64
    }

    /// Writes `a = M(σ(a)) + q·ã` and returns `(σ(a), ã)`.
    pub fn decompose(&self, a: i64) -> (Vec<u64>, i64) {
        let r = (a as i128).rem_euclid(self.q as i128);
        let quotient = ((a as i128 - r) / self.q as i128) as i64;
        (self.sigma(a), quotient)
    }
}
