//! Quadratic integer rings `Z[ξ]`, prime ideals above rational primes and
//! their residue fields.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::primes::{inv_mod, is_prime, is_square_free, kronecker_at_prime, sqrt_mod};
use super::rings::{Alphabet, ExtensionField, FiniteRing, PrimeField};
use super::AlgebraError;

/// Imaginary quadratic fields whose ring of integers is a PID.
pub const IMAGINARY_PIDS: [i64; 9] = [-1, -2, -3, -7, -11, -19, -43, -67, -163];

/// Which integral basis generator the ring uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum XiKind {
    /// `ξ = √d`, used when `d ≡ 2, 3 (mod 4)`.
    Sqrt,
    /// `ξ = (1 + √d)/2`, used when `d ≡ 1 (mod 4)`.
    HalfInteger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PidStatus {
    Pid,
    NotPid,
    /// Real quadratic fields: not asserted either way.
    Unknown,
}

/// Element `a + bξ` of a quadratic ring.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct QuadInt {
    pub a: i64,
    pub b: i64,
}

impl QuadInt {
    pub const ZERO: QuadInt = QuadInt { a: 0, b: 0 };
    pub const ONE: QuadInt = QuadInt { a: 1, b: 0 };

    pub const fn new(a: i64, b: i64) -> Self {
        QuadInt { a, b }
    }

    pub const fn integer(a: i64) -> Self {
        QuadInt { a, b: 0 }
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b < 0 {
            write!(f, "{}-{}i", self.a, -self.b)
        } else {
            write!(f, "{}+{}i", self.a, self.b)
        }
    }
}

/// The ring of integers `Z[ξ]` of `Q(√d)`.
///
/// `ξ` has minimal polynomial `x² - t·x + n` with `(t, n) = (0, -d)` for
/// `ξ = √d` and `(1, (1-d)/4)` for `ξ = (1+√d)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadraticRing {
    d: i64,
    xi: XiKind,
}

impl QuadraticRing {
    pub fn new(d: i64) -> Result<Self, AlgebraError> {
        if d == 0 || d == 1 {
            return Err(AlgebraError::DegenerateRadicand(d));
        }
        if !is_square_free(d) {
            return Err(AlgebraError::NotSquareFree(d));
        }
        let xi = if d.rem_euclid(4) == 1 {
            XiKind::HalfInteger
        } else {
            XiKind::Sqrt
        };
        Ok(QuadraticRing { d, xi })
    }

    /// `Z[i]`.
    pub fn gaussian() -> Self {
        QuadraticRing {
            d: -1,
            xi: XiKind::Sqrt,
        }
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn xi_kind(&self) -> XiKind {
        self.xi
    }

    pub fn is_imaginary(&self) -> bool {
        self.d < 0
    }

    pub fn pid_status(&self) -> PidStatus {
        if self.d > 0 {
            PidStatus::Unknown
        } else if IMAGINARY_PIDS.contains(&self.d) {
            PidStatus::Pid
        } else {
            PidStatus::NotPid
        }
    }

    /// `(t, n)` of the minimal polynomial `x² - t·x + n` of `ξ`.
    pub fn min_poly(&self) -> (i64, i64) {
        match self.xi {
            XiKind::Sqrt => (0, -self.d),
            XiKind::HalfInteger => (1, (1 - self.d) / 4),
        }
    }

    pub fn discriminant(&self) -> i64 {
        match self.xi {
            XiKind::Sqrt => 4 * self.d,
            XiKind::HalfInteger => self.d,
        }
    }

    /// `√d` written in the basis `{1, ξ}`.
    pub fn sqrt_d(&self) -> QuadInt {
        match self.xi {
            XiKind::Sqrt => QuadInt::new(0, 1),
            XiKind::HalfInteger => QuadInt::new(-1, 2),
        }
    }

    pub fn xi_value(&self) -> Complex64 {
        let root = if self.d < 0 {
            Complex64::new(0.0, (-self.d as f64).sqrt())
        } else {
            Complex64::new((self.d as f64).sqrt(), 0.0)
        };
        match self.xi {
            XiKind::Sqrt => root,
            XiKind::HalfInteger => (root + 1.0) / 2.0,
        }
    }

    pub fn embed(&self, x: QuadInt) -> Complex64 {
        self.xi_value() * x.b as f64 + x.a as f64
    }

    pub fn add(&self, x: QuadInt, y: QuadInt) -> QuadInt {
        QuadInt::new(x.a + y.a, x.b + y.b)
    }

    pub fn sub(&self, x: QuadInt, y: QuadInt) -> QuadInt {
        QuadInt::new(x.a - y.a, x.b - y.b)
    }

    pub fn neg(&self, x: QuadInt) -> QuadInt {
        QuadInt::new(-x.a, -x.b)
    }

    pub fn mul(&self, x: QuadInt, y: QuadInt) -> QuadInt {
        let (t, n) = self.min_poly();
        let bd = x.b * y.b;
        QuadInt::new(x.a * y.a - n * bd, x.a * y.b + x.b * y.a + t * bd)
    }

    pub fn scale(&self, k: i64, x: QuadInt) -> QuadInt {
        QuadInt::new(k * x.a, k * x.b)
    }

    /// Field norm `a² + t·ab + n·b²`; equals `|x|²` in the complex embedding for
    /// imaginary fields.
    pub fn norm(&self, x: QuadInt) -> i128 {
        let (t, n) = self.min_poly();
        let (a, b) = (x.a as i128, x.b as i128);
        a * a + t as i128 * a * b + n as i128 * b * b
    }

    /// Twice the real inner product `Re(x·conj(y))` of the complex embeddings
    /// (imaginary fields only), computed exactly.
    pub fn inner2(&self, x: QuadInt, y: QuadInt) -> i128 {
        self.norm(self.add(x, y)) - self.norm(x) - self.norm(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplittingKind {
    Split,
    Inert,
    Ramified,
}

/// A prime ideal `𝔭` above the rational prime `p`.
///
/// Split and ramified ideals are `(p, ξ - θ)` for a root `θ` of the minimal
/// polynomial of `ξ` modulo `p`; the inert ideal is `(p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeIdeal {
    ring: QuadraticRing,
    p: u64,
    kind: SplittingKind,
    theta: Option<u64>,
}

impl PrimeIdeal {
    pub fn ring(&self) -> &QuadraticRing {
        &self.ring
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn kind(&self) -> SplittingKind {
        self.kind
    }

    /// Inertial degree.
    pub fn inertial_degree(&self) -> u32 {
        match self.kind {
            SplittingKind::Inert => 2,
            _ => 1,
        }
    }

    /// `|𝔒_K / 𝔭| = p^f`.
    pub fn norm(&self) -> u64 {
        self.p.pow(self.inertial_degree())
    }

    pub fn theta(&self) -> Option<u64> {
        self.theta
    }

    /// Two-element generators `(p, ξ - θ)`, or `(p)` when inert.
    pub fn generators(&self) -> Vec<QuadInt> {
        let p = QuadInt::integer(self.p as i64);
        match self.theta {
            Some(theta) => vec![p, QuadInt::new(-(theta as i64), 1)],
            None => vec![p],
        }
    }

    /// For odd `p` and a non-inert ideal: the `c` in `[0, p)` with
    /// `𝔭 = (p, c + √d)`.
    pub fn sqrt_generator_offset(&self) -> Option<u64> {
        let theta = self.theta? as i64;
        if self.p == 2 {
            return None;
        }
        let p = self.p as i64;
        // √d ≡ s (mod 𝔭)
        let s = match self.ring.xi {
            XiKind::Sqrt => theta,
            XiKind::HalfInteger => 2 * theta - 1,
        };
        Some((-s).rem_euclid(p) as u64)
    }

    pub fn contains(&self, x: QuadInt) -> bool {
        let p = self.p as i128;
        match self.theta {
            Some(theta) => (x.a as i128 + x.b as i128 * theta as i128).rem_euclid(p) == 0,
            None => (x.a as i128).rem_euclid(p) == 0 && (x.b as i128).rem_euclid(p) == 0,
        }
    }

    /// Hermite normal form Z-basis `[(h11, 0), (h21, h22)]` of `𝔭`.
    pub fn z_basis(&self) -> [QuadInt; 2] {
        let p = self.p as i64;
        match self.theta {
            Some(theta) => [
                QuadInt::new(p, 0),
                QuadInt::new((-(theta as i64)).rem_euclid(p), 1),
            ],
            None => [QuadInt::new(p, 0), QuadInt::new(0, p)],
        }
    }
}

impl fmt::Display for PrimeIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.sqrt_generator_offset(), self.theta) {
            (Some(c), _) => write!(f, "({}, {}+√{})", self.p, c, self.ring.d),
            (None, Some(theta)) => write!(f, "({}, ξ-{})", self.p, theta),
            (None, None) => write!(f, "({})", self.p),
        }
    }
}

/// The prime ideals above `p`: one for inert and ramified primes, a conjugate
/// pair for split primes (smaller `θ` first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub kind: SplittingKind,
    pub ideals: Vec<PrimeIdeal>,
}

impl Factorization {
    pub fn primary(&self) -> &PrimeIdeal {
        &self.ideals[0]
    }
}

/// Factors `p·𝔒_K`. The splitting type follows the Kronecker symbol of the
/// field discriminant at `p`.
pub fn factor_rational_prime(ring: &QuadraticRing, p: u64) -> Result<Factorization, AlgebraError> {
    if !is_prime(p) {
        return Err(AlgebraError::NotPrime(p));
    }
    let disc = ring.discriminant();
    let kind = match kronecker_at_prime(disc, p) {
        1 => SplittingKind::Split,
        -1 => SplittingKind::Inert,
        _ => SplittingKind::Ramified,
    };
    let roots = min_poly_roots(ring, p);
    let expected = match kind {
        SplittingKind::Split => 2,
        SplittingKind::Inert => 0,
        SplittingKind::Ramified => 1,
    };
    assert_eq!(
        roots.len(),
        expected,
        "splitting type disagrees with root count"
    );
    let ideals = if roots.is_empty() {
        vec![PrimeIdeal {
            ring: *ring,
            p,
            kind,
            theta: None,
        }]
    } else {
        roots
            .into_iter()
            .map(|theta| PrimeIdeal {
                ring: *ring,
                p,
                kind,
                theta: Some(theta),
            })
            .collect()
    };
    Ok(Factorization { kind, ideals })
}

/// Distinct roots in `[0, p)` of the minimal polynomial of `ξ` modulo `p`,
/// ascending.
fn min_poly_roots(ring: &QuadraticRing, p: u64) -> Vec<u64> {
    let (t, n) = ring.min_poly();
    let pi = p as i64;
    let mut roots = if p == 2 {
        (0..2i64)
            .filter(|x| (x * x - t * x + n).rem_euclid(2) == 0)
            .map(|x| x as u64)
            .collect::<Vec<_>>()
    } else {
        // roots are (t ± √D)/2 with D = t² - 4n the discriminant
        match sqrt_mod(ring.discriminant(), p) {
            None => Vec::new(),
            Some(s) => {
                let half = inv_mod(2, p).unwrap() as i128;
                let (t, s, p128) = (t as i128, s as i128, pi as i128);
                vec![
                    ((t + s) * half).rem_euclid(p128) as u64,
                    ((t - s) * half).rem_euclid(p128) as u64,
                ]
            }
        }
    };
    roots.sort_unstable();
    roots.dedup();
    roots
}

/// Hermite normal form of the ideal generated by `gens`, as a Z-basis
/// `[(h11, 0), (h21, h22)]` with `h22 > 0` and `0 <= h21 < h11`.
pub fn ideal_z_basis(ring: &QuadraticRing, gens: &[QuadInt]) -> Result<[QuadInt; 2], AlgebraError> {
    let xi = QuadInt::new(0, 1);
    let mut vecs: Vec<(i128, i128)> = gens
        .iter()
        .flat_map(|&g| [g, ring.mul(g, xi)])
        .map(|v| (v.a as i128, v.b as i128))
        .collect();
    // Euclid on the ξ-coordinate until a single vector carries it
    loop {
        let mut nonzero: Vec<usize> = (0..vecs.len()).filter(|&i| vecs[i].1 != 0).collect();
        if nonzero.len() <= 1 {
            break;
        }
        nonzero.sort_by_key(|&i| vecs[i].1.abs());
        let pivot = vecs[nonzero[0]];
        for &i in &nonzero[1..] {
            let f = vecs[i].1.div_euclid(pivot.1);
            vecs[i] = (vecs[i].0 - f * pivot.0, vecs[i].1 - f * pivot.1);
        }
    }
    let mut top = vecs
        .iter()
        .copied()
        .find(|v| v.1 != 0)
        .ok_or(AlgebraError::DegenerateIdeal)?;
    if top.1 < 0 {
        top = (-top.0, -top.1);
    }
    let h11 = vecs
        .iter()
        .filter(|v| v.1 == 0)
        .fold(0i128, |g, v| gcd_i128(g, v.0));
    if h11 == 0 {
        return Err(AlgebraError::DegenerateIdeal);
    }
    Ok([
        QuadInt::new(h11 as i64, 0),
        QuadInt::new(top.0.rem_euclid(h11) as i64, top.1 as i64),
    ])
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// The ring isomorphism `M: F_{p^f} -> 𝔒_K/𝔭` with coset representatives.
///
/// Split and ramified ideals use the field `F_p` with representatives
/// `0, 1, ..., p-1` and reduction `a + bξ ↦ a + bθ mod p`. Inert ideals use
/// `F_p[x]/(minpoly of ξ)` and map index `a + b·p` to `a + bξ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueFieldMap {
    ideal: PrimeIdeal,
    field: Alphabet,
    reps: Vec<QuadInt>,
}

impl ResidueFieldMap {
    pub fn new(ideal: PrimeIdeal) -> Result<Self, AlgebraError> {
        let p = ideal.p;
        let field = match ideal.kind {
            SplittingKind::Inert => {
                let (t, n) = ideal.ring.min_poly();
                Alphabet::Extension(ExtensionField::new(p, t, n)?)
            }
            _ => Alphabet::Prime(PrimeField::new(p)?),
        };
        let reps = (0..ideal.norm())
            .map(|c| match ideal.kind {
                SplittingKind::Inert => QuadInt::new((c % p) as i64, (c / p) as i64),
                _ => QuadInt::integer(c as i64),
            })
            .collect();
        Ok(ResidueFieldMap { ideal, field, reps })
    }

    pub fn ideal(&self) -> &PrimeIdeal {
        &self.ideal
    }

    pub fn ring(&self) -> &QuadraticRing {
        &self.ideal.ring
    }

    pub fn field(&self) -> &Alphabet {
        &self.field
    }

    pub fn representatives(&self) -> &[QuadInt] {
        &self.reps
    }

    /// `M(c)`: the coset representative of field element `c`.
    pub fn lift(&self, c: u64) -> QuadInt {
        self.reps[c as usize]
    }

    /// `σ = M⁻¹ ∘ (mod 𝔭)` on an arbitrary ring element.
    pub fn reduce(&self, x: QuadInt) -> u64 {
        let p = self.ideal.p as i128;
        match self.ideal.theta {
            Some(theta) => (x.a as i128 + x.b as i128 * theta as i128).rem_euclid(p) as u64,
            None => {
                let (a, b) = ((x.a as i128).rem_euclid(p), (x.b as i128).rem_euclid(p));
                (a + b * p) as u64
            }
        }
    }

    /// Canonical representative of `x mod 𝔭`.
    pub fn canonical(&self, x: QuadInt) -> QuadInt {
        self.lift(self.reduce(x))
    }

    pub fn field_size(&self) -> u64 {
        self.field.size()
    }
}
