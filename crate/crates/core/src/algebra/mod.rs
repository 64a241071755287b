//! Exact arithmetic: prime fields, chain rings `Z/p^eZ`, the CRT isomorphism,
//! and quadratic integer rings with prime-ideal residue fields.

pub mod crt;
pub mod primes;
pub mod quadratic;
pub mod rings;

use thiserror::Error;

pub use crt::CrtMap;
pub use quadratic::{
    factor_rational_prime, ideal_z_basis, Factorization, PidStatus, PrimeIdeal, QuadInt,
    QuadraticRing, ResidueFieldMap, SplittingKind, XiKind,
};
pub use rings::{Alphabet, ChainRing, ExtensionField, FiniteRing, PrimeField};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("prime {0} appears in more than one modulus")]
    RepeatedPrime(u64),
    #[error("at least one modulus is required")]
    EmptyModuli,
    #[error("modulus must be at least 2, got {0}")]
    ModulusTooSmall(u64),
    #[error("chain ring exponent must be at least 1")]
    ZeroExponent,
    #[error("modulus overflows the supported range")]
    Overflow,
    #[error("expected {expected} coordinates, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("d = {0} is excluded (d must not be 0 or 1)")]
    DegenerateRadicand(i64),
    #[error("d = {0} is not square-free")]
    NotSquareFree(i64),
    #[error("x^2 - {trace}x + {norm} is reducible over F_{p}")]
    Reducible { p: u64, trace: i64, norm: i64 },
    #[error("generators span the zero ideal or a rank-one module")]
    DegenerateIdeal,
}
