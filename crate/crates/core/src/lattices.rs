//! Lattices of the form `M(codebook) + qZ^N` (or `+ 𝔭^N` over a quadratic ring).
//!
//! Membership is decided through the defining homomorphism `σ`: reduce the
//! vector, then ask each level code whether the residue is a codeword.
//! Construction D is the exception: its membership walks the levels of the
//! nested chain, peeling off one `p`-adic digit per level.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::primes::inv_mod;
use crate::algebra::{
    AlgebraError, Alphabet, CrtMap, PrimeIdeal, QuadInt, QuadraticRing, ResidueFieldMap,
};
use crate::codes::{
    lift_chain_to_ring_code, CodeError, LinearCode, NestedCodeChain, MAX_ENUMERATION,
};

/// Largest number of integer vectors [`LatticeDescriptor::enumerate_box`] will scan.
pub const MAX_BOX_POINTS: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("expected a vector of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("construction needs codes over prime fields")]
    NotPrimeField,
    #[error("at least one code is required")]
    NoCodes,
    #[error("prime {0} is used by more than one level")]
    RepeatedPrime(u64),
    #[error("all codes must share block length {expected}, found {got}")]
    UnequalLengths { expected: usize, got: usize },
    #[error("requested {requested} levels but the chain has {available}")]
    LevelsExceedChain { requested: usize, available: usize },
    #[error("construction D needs at least one level")]
    ZeroLevels,
    #[error("codes do not match the prime-power factors of q = {q}")]
    FactorMismatch { q: u64 },
    #[error("code alphabet does not match the residue field of the ideal")]
    AlphabetMismatch,
    #[error("lattices over real quadratic rings are not supported")]
    RealQuadratic,
    #[error("vector entries do not live in this lattice's ambient ring")]
    AmbientMismatch,
    #[error("box holds {0} integer vectors, more than the enumeration limit")]
    BoxTooLarge(u128),
    #[error("box bounds are empty or inverted")]
    InvalidBounds,
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    A,
    D,
    PiA,
    PiD,
    AOk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ambient {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Structure {
    /// `M(C^1, …, C^L) + qZ^N` with `M` the CRT map (A, π_A, π_D).
    Crt { map: CrtMap, codes: Vec<LinearCode> },
    /// Construction D: `p^L Z^N + Σ_l p^{l-1} Σ_{i ≤ n^l} a_{li} g_i`.
    Chain { chain: NestedCodeChain, levels: u32 },
    /// `M(C) + 𝔭^N` over the ring of integers of an imaginary quadratic field.
    Quadratic {
        residue: ResidueFieldMap,
        code: LinearCode,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeDescriptor {
    kind: LatticeKind,
    dimension: usize,
    structure: Structure,
}

/// Construction A over `F_p` with the natural embedding `F_p -> [0, p)`.
pub fn construction_a(code: LinearCode) -> Result<LatticeDescriptor, LatticeError> {
    let Alphabet::Prime(field) = code.alphabet() else {
        return Err(LatticeError::NotPrimeField);
    };
    let map = CrtMap::new(&[field.modulus()])?;
    Ok(LatticeDescriptor {
        kind: LatticeKind::A,
        dimension: code.length(),
        structure: Structure::Crt {
            map,
            codes: vec![code],
        },
    })
}

/// Construction D with `levels` levels of the chain (real, unreduced sums).
pub fn construction_d(
    chain: NestedCodeChain,
    levels: u32,
) -> Result<LatticeDescriptor, LatticeError> {
    if levels == 0 {
        return Err(LatticeError::ZeroLevels);
    }
    if levels as usize > chain.levels() {
        return Err(LatticeError::LevelsExceedChain {
            requested: levels as usize,
            available: chain.levels(),
        });
    }
    chain
        .prime()
        .checked_pow(levels)
        .filter(|q| *q < (1 << 62))
        .ok_or(AlgebraError::Overflow)?;
    Ok(LatticeDescriptor {
        kind: LatticeKind::D,
        dimension: chain.length(),
        structure: Structure::Chain { chain, levels },
    })
}

/// Construction π_A over distinct primes, levels kept in the given order.
pub fn construction_pi_a(codes: Vec<LinearCode>) -> Result<LatticeDescriptor, LatticeError> {
    let dimension = common_length(&codes)?;
    let mut primes = Vec::with_capacity(codes.len());
    for code in &codes {
        let Alphabet::Prime(field) = code.alphabet() else {
            return Err(LatticeError::NotPrimeField);
        };
        if primes.contains(&field.modulus()) {
            return Err(LatticeError::RepeatedPrime(field.modulus()));
        }
        primes.push(field.modulus());
    }
    let map = CrtMap::new(&primes)?;
    Ok(LatticeDescriptor {
        kind: LatticeKind::PiA,
        dimension,
        structure: Structure::Crt { map, codes },
    })
}

/// Construction π_D: one code over `Z/p_l^{e_l}Z` per prime-power factor of
/// `q`. Codes may be given in any order; levels follow ascending primes.
pub fn construction_pi_d(
    q: u64,
    codes: Vec<LinearCode>,
) -> Result<LatticeDescriptor, LatticeError> {
    let map = CrtMap::from_modulus(q)?;
    let dimension = common_length(&codes)?;
    if codes.len() != map.levels() {
        return Err(LatticeError::FactorMismatch { q });
    }
    let mut slots: Vec<Option<LinearCode>> = vec![None; map.levels()];
    for code in codes {
        let pe = code
            .alphabet()
            .prime_power()
            .ok_or(LatticeError::FactorMismatch { q })?;
        let idx = map
            .factors()
            .iter()
            .position(|&f| f == pe)
            .ok_or(LatticeError::FactorMismatch { q })?;
        if slots[idx].replace(code).is_some() {
            return Err(LatticeError::FactorMismatch { q });
        }
    }
    let codes = slots
        .into_iter()
        .map(|c| c.expect("every factor filled"))
        .collect();
    Ok(LatticeDescriptor {
        kind: LatticeKind::PiD,
        dimension,
        structure: Structure::Crt { map, codes },
    })
}

/// Construction A over `𝔒_K`: `M(C) + 𝔭^N` with `M: F_{p^f} -> 𝔒_K/𝔭`.
pub fn construction_a_ok(
    code: LinearCode,
    ideal: PrimeIdeal,
) -> Result<LatticeDescriptor, LatticeError> {
    if !ideal.ring().is_imaginary() {
        return Err(LatticeError::RealQuadratic);
    }
    let residue = ResidueFieldMap::new(ideal)?;
    if code.alphabet() != residue.field() {
        return Err(LatticeError::AlphabetMismatch);
    }
    Ok(LatticeDescriptor {
        kind: LatticeKind::AOk,
        dimension: code.length(),
        structure: Structure::Quadratic { residue, code },
    })
}

fn common_length(codes: &[LinearCode]) -> Result<usize, LatticeError> {
    let first = codes.first().ok_or(LatticeError::NoCodes)?.length();
    for c in codes {
        if c.length() != first {
            return Err(LatticeError::UnequalLengths {
                expected: first,
                got: c.length(),
            });
        }
    }
    Ok(first)
}

impl LatticeDescriptor {
    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn ambient(&self) -> Ambient {
        match self.structure {
            Structure::Quadratic { .. } => Ambient::Complex,
            _ => Ambient::Real,
        }
    }

    /// The coarse modulus `q` for real lattices.
    pub fn modulus(&self) -> Option<u64> {
        match &self.structure {
            Structure::Crt { map, .. } => Some(map.modulus()),
            Structure::Chain { chain, levels } => Some(chain.prime().pow(*levels)),
            Structure::Quadratic { .. } => None,
        }
    }

    pub fn residue_map(&self) -> Option<&ResidueFieldMap> {
        match &self.structure {
            Structure::Quadratic { residue, .. } => Some(residue),
            _ => None,
        }
    }

    /// The equivalent CRT description: Construction D becomes Construction A
    /// over `Z/p^LZ` with the lifted chain code.
    pub fn crt_form(&self) -> Option<(CrtMap, Vec<LinearCode>)> {
        match &self.structure {
            Structure::Crt { map, codes } => Some((map.clone(), codes.clone())),
            Structure::Chain { chain, levels } => {
                let code = lift_chain_to_ring_code(chain, *levels).ok()?;
                let map = CrtMap::new(&[chain.prime().pow(*levels)]).ok()?;
                Some((map, vec![code]))
            }
            Structure::Quadratic { .. } => None,
        }
    }

    fn check_dim(&self, got: usize) -> Result<(), LatticeError> {
        if got != self.dimension {
            return Err(LatticeError::DimensionMismatch {
                expected: self.dimension,
                got,
            });
        }
        Ok(())
    }

    /// Membership of an integer vector.
    pub fn contains(&self, v: &[i64]) -> Result<bool, LatticeError> {
        self.check_dim(v.len())?;
        match &self.structure {
            Structure::Crt { map, codes } => {
                for (level, code) in codes.iter().enumerate() {
                    let residue: Vec<u64> = v.iter().map(|&x| map.sigma_level(x, level)).collect();
                    if !code.contains(&residue)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Structure::Chain { chain, levels } => chain_contains(chain, *levels, v),
            Structure::Quadratic { .. } => Err(LatticeError::AmbientMismatch),
        }
    }

    /// Membership of a vector over `𝔒_K` (complex-ambient lattices only).
    pub fn contains_ring(&self, v: &[QuadInt]) -> Result<bool, LatticeError> {
        self.check_dim(v.len())?;
        match &self.structure {
            Structure::Quadratic { residue, code } => {
                let word: Vec<u64> = v.iter().map(|&x| residue.reduce(x)).collect();
                Ok(code.contains(&word)?)
            }
            _ => Err(LatticeError::AmbientMismatch),
        }
    }

    /// `Λ ∩ [0, q)^N`, sorted: one representative per coset of `qZ^N`.
    pub fn coset_representatives(&self) -> Result<Vec<Vec<i64>>, LatticeError> {
        let n = self.dimension;
        match &self.structure {
            Structure::Crt { map, codes } => {
                let books = codes
                    .iter()
                    .map(|c| c.codebook())
                    .collect::<Result<Vec<_>, _>>()?;
                let total = books
                    .iter()
                    .fold(1u128, |acc, b| acc.saturating_mul(b.len() as u128));
                if total > MAX_ENUMERATION {
                    return Err(CodeError::CodebookTooLarge(total).into());
                }
                let mut out = Vec::with_capacity(total as usize);
                let mut idx = vec![0usize; books.len()];
                loop {
                    let point = (0..n)
                        .map(|j| {
                            let coords: Vec<u64> =
                                books.iter().zip(&idx).map(|(b, &i)| b[i][j]).collect();
                            map.forward(&coords).map(|x| x as i64)
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    out.push(point);
                    if !advance(&mut idx, &books.iter().map(Vec::len).collect::<Vec<_>>()) {
                        break;
                    }
                }
                out.sort();
                Ok(out)
            }
            Structure::Chain { chain, levels } => {
                let p = chain.prime();
                let q = p.pow(*levels) as i64;
                let gens: Vec<(i64, &Vec<u64>)> = (0..*levels as usize)
                    .flat_map(|l| {
                        chain.basis()[..chain.dim(l)]
                            .iter()
                            .map(move |g| (p.pow(l as u32) as i64, g))
                    })
                    .collect();
                let total = (p as u128).saturating_pow(gens.len() as u32);
                if total > MAX_ENUMERATION {
                    return Err(CodeError::CodebookTooLarge(total).into());
                }
                let mut set = BTreeSet::new();
                let radix = vec![p as usize; gens.len()];
                let mut coeffs = vec![0usize; gens.len()];
                loop {
                    let mut point = vec![0i64; n];
                    for ((scale, g), &a) in gens.iter().zip(&coeffs) {
                        for (x, &gj) in point.iter_mut().zip(g.iter()) {
                            *x += scale * a as i64 * gj as i64;
                        }
                    }
                    set.insert(
                        point
                            .into_iter()
                            .map(|x| x.rem_euclid(q))
                            .collect::<Vec<_>>(),
                    );
                    if !advance(&mut coeffs, &radix) {
                        break;
                    }
                }
                Ok(set.into_iter().collect())
            }
            Structure::Quadratic { .. } => Err(LatticeError::AmbientMismatch),
        }
    }

    /// All lattice points with `lo_j ≤ v_j ≤ hi_j`, scanned through [`Self::contains`].
    pub fn enumerate_box(&self, bounds: &[(i64, i64)]) -> Result<Vec<Vec<i64>>, LatticeError> {
        self.check_dim(bounds.len())?;
        let sides = box_sides(bounds.iter().copied())?;
        let mut out = Vec::new();
        let mut idx = vec![0usize; sides.len()];
        loop {
            let v: Vec<i64> = bounds
                .iter()
                .zip(&idx)
                .map(|(&(lo, _), &i)| lo + i as i64)
                .collect();
            if self.contains(&v)? {
                out.push(v);
            }
            if !advance(&mut idx, &sides) {
                break;
            }
        }
        Ok(out)
    }

    /// Ring points whose coordinates `a + bξ` satisfy the per-coordinate bounds
    /// `(a_lo, a_hi)`, `(b_lo, b_hi)`.
    pub fn enumerate_ring_box(
        &self,
        bounds: &[((i64, i64), (i64, i64))],
    ) -> Result<Vec<Vec<QuadInt>>, LatticeError> {
        self.check_dim(bounds.len())?;
        let flat: Vec<(i64, i64)> = bounds.iter().flat_map(|&(a, b)| [a, b]).collect();
        let sides = box_sides(flat.iter().copied())?;
        let mut out = Vec::new();
        let mut idx = vec![0usize; sides.len()];
        loop {
            let v: Vec<QuadInt> = (0..bounds.len())
                .map(|j| {
                    QuadInt::new(
                        flat[2 * j].0 + idx[2 * j] as i64,
                        flat[2 * j + 1].0 + idx[2 * j + 1] as i64,
                    )
                })
                .collect();
            if self.contains_ring(&v)? {
                out.push(v);
            }
            if !advance(&mut idx, &sides) {
                break;
            }
        }
        Ok(out)
    }

    /// Nearest lattice point to a real vector (ties toward the
    /// lexicographically smallest point).
    pub fn quantize(&self, y: &[f64]) -> Result<Vec<i64>, LatticeError> {
        self.check_dim(y.len())?;
        let q = self.modulus().ok_or(LatticeError::AmbientMismatch)?;
        let cosets = residue_cosets(&self.coset_representatives()?);
        Ok(nearest_in_cosets(y, q, &cosets))
    }

    /// Nearest lattice point to a complex vector (complex-ambient lattices).
    pub fn quantize_complex(&self, y: &[Complex64]) -> Result<Vec<QuadInt>, LatticeError> {
        self.check_dim(y.len())?;
        let Structure::Quadratic { residue, code } = &self.structure else {
            return Err(LatticeError::AmbientMismatch);
        };
        let ideal = IdealLattice::new(residue);
        Ok(ideal.nearest_in_code(y, &code.codebook()?))
    }
}

/// Construction D membership: level by level, the current vector must reduce
/// to a codeword of `C^l`; subtract the matching combination and divide by `p`.
fn chain_contains(chain: &NestedCodeChain, levels: u32, v: &[i64]) -> Result<bool, LatticeError> {
    let p = chain.prime() as i64;
    let mut cur = v.to_vec();
    for level in 0..levels as usize {
        let code = chain.level_code(level);
        let residue: Vec<u64> = cur.iter().map(|&x| x.rem_euclid(p) as u64).collect();
        let Some(coeffs) = code.solve(&residue)? else {
            return Ok(false);
        };
        for (&a, g) in coeffs.iter().zip(code.rows()) {
            for (x, &gj) in cur.iter_mut().zip(g) {
                *x -= a as i64 * gj as i64;
            }
        }
        for x in cur.iter_mut() {
            debug_assert_eq!(x.rem_euclid(p), 0);
            *x = x.div_euclid(p);
        }
    }
    Ok(true)
}

fn box_sides(bounds: impl Iterator<Item = (i64, i64)>) -> Result<Vec<usize>, LatticeError> {
    let mut total = 1u128;
    let mut sides = Vec::new();
    for (lo, hi) in bounds {
        if hi < lo {
            return Err(LatticeError::InvalidBounds);
        }
        let side = (hi as i128 - lo as i128 + 1) as u128;
        total = total.saturating_mul(side);
        if total > MAX_BOX_POINTS {
            return Err(LatticeError::BoxTooLarge(total));
        }
        sides.push(side as usize);
    }
    Ok(sides)
}

/// Mixed-radix counter; returns `false` after wrapping past the last index.
fn advance(idx: &mut [usize], radix: &[usize]) -> bool {
    for (i, r) in idx.iter_mut().zip(radix).rev() {
        *i += 1;
        if *i < *r {
            return true;
        }
        *i = 0;
    }
    false
}

fn residue_cosets(points: &[Vec<i64>]) -> Vec<Vec<u64>> {
    points
        .iter()
        .map(|p| p.iter().map(|&x| x as u64).collect())
        .collect()
}

/// Nearest integer `k` to `x`, halves rounded down.
fn round_half_down(x: f64) -> i64 {
    (x - 0.5).ceil() as i64
}

const TIE_EPS: f64 = 1e-9;

/// Nearest point of `∪_c (c + qZ^N)` to `y`, `c` ranging over residue vectors.
pub(crate) fn nearest_in_cosets(y: &[f64], q: u64, cosets: &[Vec<u64>]) -> Vec<i64> {
    let qf = q as f64;
    let mut best: Option<(f64, Vec<i64>)> = None;
    for c in cosets {
        let mut dist = 0.0;
        let point: Vec<i64> = y
            .iter()
            .zip(c)
            .map(|(&yj, &cj)| {
                let k = round_half_down((yj - cj as f64) / qf);
                let x = cj as i64 + k * q as i64;
                dist += (yj - x as f64).powi(2);
                x
            })
            .collect();
        if is_better(dist, &point, best.as_ref()) {
            best = Some((dist, point));
        }
    }
    best.expect("at least the zero coset").1
}

fn is_better<T: Ord>(dist: f64, point: &T, best: Option<&(f64, T)>) -> bool {
    match best {
        None => true,
        Some((bd, bp)) => {
            let eps = TIE_EPS * (1.0 + bd.abs());
            dist < bd - eps || (dist <= bd + eps && point < bp)
        }
    }
}

/// `v mod qZ^N` into the half-open region `[0, q)^N`.
pub fn mod_q(v: &[f64], q: u64) -> Vec<f64> {
    let qf = q as f64;
    v.iter()
        .map(|&x| {
            let r = x - qf * (x / qf).floor();
            if r >= qf {
                r - qf
            } else {
                r
            }
        })
        .collect()
}

/// The ideal `𝔭` as a two-dimensional lattice in `C`, with a Lagrange-reduced
/// basis for nearest-point search and its Hermite basis for the fundamental
/// parallelogram.
#[derive(Debug, Clone)]
pub struct IdealLattice {
    ring: QuadraticRing,
    residue: ResidueFieldMap,
    reduced: [QuadInt; 2],
    reduced_embed: [Complex64; 2],
    hermite: [QuadInt; 2],
    hermite_embed: [Complex64; 2],
}

impl IdealLattice {
    pub fn new(residue: &ResidueFieldMap) -> Self {
        let ring = *residue.ring();
        let hermite = residue.ideal().z_basis();
        let reduced = lagrange_reduce(&ring, hermite);
        IdealLattice {
            ring,
            residue: residue.clone(),
            reduced,
            reduced_embed: [ring.embed(reduced[0]), ring.embed(reduced[1])],
            hermite,
            hermite_embed: [ring.embed(hermite[0]), ring.embed(hermite[1])],
        }
    }

    pub fn ring(&self) -> &QuadraticRing {
        &self.ring
    }

    pub fn residue(&self) -> &ResidueFieldMap {
        &self.residue
    }

    /// Hermite basis `(b1, b2)` spanning the fundamental parallelogram.
    pub fn basis(&self) -> [QuadInt; 2] {
        self.hermite
    }

    pub fn basis_embedded(&self) -> [Complex64; 2] {
        self.hermite_embed
    }

    /// Nearest element of `𝔭` to `target`.
    pub fn nearest(&self, target: Complex64) -> QuadInt {
        let [u, v] = self.reduced_embed;
        let (c1, c2) = solve2(u, v, target);
        let (k1, k2) = (c1.round() as i64, c2.round() as i64);
        let mut best: Option<(f64, QuadInt)> = None;
        for i in -2..=2 {
            for j in -2..=2 {
                let x = self.ring.add(
                    self.ring.scale(k1 + i, self.reduced[0]),
                    self.ring.scale(k2 + j, self.reduced[1]),
                );
                let d = (self.ring.embed(x) - target).norm_sqr();
                if is_better(d, &x, best.as_ref()) {
                    best = Some((d, x));
                }
            }
        }
        best.unwrap().1
    }

    /// Nearest element of the coset `r + 𝔭` for field element `r`.
    pub fn nearest_in_coset(&self, target: Complex64, r: u64) -> QuadInt {
        let rep = self.residue.lift(r);
        self.ring
            .add(rep, self.nearest(target - self.ring.embed(rep)))
    }

    /// Nearest point of `M(C) + 𝔭^N` to `y`, over the given codebook.
    pub fn nearest_in_code(&self, y: &[Complex64], codebook: &[Vec<u64>]) -> Vec<QuadInt> {
        let size = self.residue.field_size() as usize;
        // per-coordinate table over all residues
        let table: Vec<Vec<(f64, QuadInt)>> = y
            .iter()
            .map(|&yj| {
                (0..size as u64)
                    .map(|r| {
                        let x = self.nearest_in_coset(yj, r);
                        ((self.ring.embed(x) - yj).norm_sqr(), x)
                    })
                    .collect()
            })
            .collect();
        let mut best: Option<(f64, Vec<QuadInt>)> = None;
        for word in codebook {
            let dist: f64 = word.iter().zip(&table).map(|(&c, t)| t[c as usize].0).sum();
            let point: Vec<QuadInt> = word
                .iter()
                .zip(&table)
                .map(|(&c, t)| t[c as usize].1)
                .collect();
            if is_better(dist, &point, best.as_ref()) {
                best = Some((dist, point));
            }
        }
        best.expect("codebook contains zero").1
    }

    /// `z mod 𝔭` into the half-open parallelogram `{s·b1 + t·b2 : s, t ∈ [0, 1)}`.
    pub fn reduce_complex(&self, z: Complex64) -> Complex64 {
        let [b1, b2] = self.hermite_embed;
        let (s, t) = solve2(b1, b2, z);
        let (s, t) = (s - s.floor(), t - t.floor());
        b1 * s + b2 * t
    }

    /// Canonical representative of `x mod 𝔭` inside the parallelogram.
    pub fn reduce_exact(&self, x: QuadInt) -> QuadInt {
        self.residue.canonical(x)
    }

    /// Centre of the fundamental parallelogram.
    pub fn center(&self) -> Complex64 {
        (self.hermite_embed[0] + self.hermite_embed[1]) / 2.0
    }

    /// `E|x - centre|²` for `x` uniform over the fundamental parallelogram.
    pub fn second_moment(&self) -> f64 {
        (self.hermite_embed[0].norm_sqr() + self.hermite_embed[1].norm_sqr()) / 12.0
    }
}

/// Real coordinates `(c1, c2)` with `target = c1·u + c2·v`.
fn solve2(u: Complex64, v: Complex64, target: Complex64) -> (f64, f64) {
    let det = u.re * v.im - u.im * v.re;
    let c1 = (target.re * v.im - target.im * v.re) / det;
    let c2 = (u.re * target.im - u.im * target.re) / det;
    (c1, c2)
}

fn lagrange_reduce(ring: &QuadraticRing, basis: [QuadInt; 2]) -> [QuadInt; 2] {
    let [mut u, mut v] = basis;
    if ring.norm(v) < ring.norm(u) {
        std::mem::swap(&mut u, &mut v);
    }
    loop {
        // μ = round(<u, v> / <u, u>) with <x, y> = inner2 / 2
        let num = ring.inner2(u, v);
        let den = 2 * ring.norm(u);
        let mu = (2 * num + den).div_euclid(2 * den) as i64;
        v = ring.sub(v, ring.scale(mu, u));
        if ring.norm(v) >= ring.norm(u) {
            return [u, v];
        }
        std::mem::swap(&mut u, &mut v);
    }
}

/// A fine lattice together with its coarse lattice `qZ^N` (or `𝔭^N`), with
/// the coset tables needed for repeated quantization precomputed.
#[derive(Debug, Clone)]
pub struct LatticePair {
    fine: LatticeDescriptor,
    coarse: Coarse,
}

#[derive(Debug, Clone)]
enum Coarse {
    Integer {
        q: u64,
        cosets: Vec<Vec<u64>>,
        levels: Vec<(u64, Vec<Vec<u64>>)>,
    },
    Ideal {
        ideal: Box<IdealLattice>,
        codebook: Vec<Vec<u64>>,
    },
}

impl LatticePair {
    pub fn new(fine: LatticeDescriptor) -> Result<Self, LatticeError> {
        let coarse = match &fine.structure {
            Structure::Quadratic { residue, code } => Coarse::Ideal {
                ideal: Box::new(IdealLattice::new(residue)),
                codebook: code.codebook()?,
            },
            _ => {
                let q = fine.modulus().expect("real lattices have a modulus");
                let cosets = residue_cosets(&fine.coset_representatives()?);
                let (map, codes) = fine.crt_form().expect("real lattices have a CRT form");
                let levels = map
                    .moduli()
                    .iter()
                    .zip(&codes)
                    .map(|(&m, c)| c.codebook().map(|b| (m, b)))
                    .collect::<Result<Vec<_>, _>>()?;
                Coarse::Integer { q, cosets, levels }
            }
        };
        Ok(LatticePair { fine, coarse })
    }

    pub fn fine(&self) -> &LatticeDescriptor {
        &self.fine
    }

    pub fn modulus(&self) -> Option<u64> {
        match &self.coarse {
            Coarse::Integer { q, .. } => Some(*q),
            Coarse::Ideal { .. } => None,
        }
    }

    pub fn ideal(&self) -> Option<&IdealLattice> {
        match &self.coarse {
            Coarse::Ideal { ideal, .. } => Some(&**ideal),
            Coarse::Integer { .. } => None,
        }
    }

    /// Every coarse point `q·e_j` (or generator of `𝔭` in coordinate `j`)
    /// passes fine membership.
    pub fn coarse_is_sublattice(&self) -> Result<bool, LatticeError> {
        let n = self.fine.dimension;
        for j in 0..n {
            match &self.coarse {
                Coarse::Integer { q, .. } => {
                    let mut v = vec![0i64; n];
                    v[j] = *q as i64;
                    if !self.fine.contains(&v)? {
                        return Ok(false);
                    }
                }
                Coarse::Ideal { ideal, .. } => {
                    for g in ideal.basis() {
                        let mut v = vec![QuadInt::ZERO; n];
                        v[j] = g;
                        if !self.fine.contains_ring(&v)? {
                            return Ok(false);
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    /// `v mod Λ_c` into `[0, q)^N` (real coarse lattice).
    pub fn mod_coarse(&self, v: &[f64]) -> Result<Vec<f64>, LatticeError> {
        self.fine.check_dim(v.len())?;
        let q = self.modulus().ok_or(LatticeError::AmbientMismatch)?;
        Ok(mod_q(v, q))
    }

    pub fn mod_coarse_int(&self, v: &[i64]) -> Result<Vec<i64>, LatticeError> {
        self.fine.check_dim(v.len())?;
        let q = self.modulus().ok_or(LatticeError::AmbientMismatch)? as i64;
        Ok(v.iter().map(|x| x.rem_euclid(q)).collect())
    }

    /// Complex `v mod Λ_c`: real and imaginary parts reduced separately for
    /// real lattices used on I/Q, parallelogram reduction for `𝔭^N`.
    pub fn mod_coarse_complex(&self, v: &[Complex64]) -> Result<Vec<Complex64>, LatticeError> {
        self.fine.check_dim(v.len())?;
        Ok(match &self.coarse {
            Coarse::Integer { q, .. } => {
                let re = mod_q(&v.iter().map(|z| z.re).collect::<Vec<_>>(), *q);
                let im = mod_q(&v.iter().map(|z| z.im).collect::<Vec<_>>(), *q);
                re.into_iter()
                    .zip(im)
                    .map(|(a, b)| Complex64::new(a, b))
                    .collect()
            }
            Coarse::Ideal { ideal, .. } => v.iter().map(|&z| ideal.reduce_complex(z)).collect(),
        })
    }

    /// Nearest fine-lattice point to a real vector.
    pub fn quantize(&self, y: &[f64]) -> Result<Vec<i64>, LatticeError> {
        self.fine.check_dim(y.len())?;
        match &self.coarse {
            Coarse::Integer { q, cosets, .. } => Ok(nearest_in_cosets(y, *q, cosets)),
            Coarse::Ideal { .. } => Err(LatticeError::AmbientMismatch),
        }
    }

    /// Nearest fine-lattice point to a complex vector over `𝔒_K`.
    pub fn quantize_ring(&self, y: &[Complex64]) -> Result<Vec<QuadInt>, LatticeError> {
        self.fine.check_dim(y.len())?;
        match &self.coarse {
            Coarse::Ideal { ideal, codebook } => Ok(ideal.nearest_in_code(y, codebook)),
            Coarse::Integer { .. } => Err(LatticeError::AmbientMismatch),
        }
    }

    /// Multistage decoding through the CRT levels: level `l` fixes the
    /// residue modulo `m_l` by decoding only `C^l + m_l Z^N`, conditioned on the
    /// residues already fixed; a final rounding fixes the `qZ^N` part.
    pub fn quantize_multistage(&self, y: &[f64]) -> Result<Vec<i64>, LatticeError> {
        self.fine.check_dim(y.len())?;
        let Coarse::Integer { levels, .. } = &self.coarse else {
            return Err(LatticeError::AmbientMismatch);
        };
        let n = y.len();
        let mut offset = vec![0i64; n];
        let mut scale = 1i64;
        for (m, book) in levels {
            let m = *m as i64;
            let inv =
                inv_mod(scale.rem_euclid(m) as u64, m as u64).expect("levels are coprime") as i128;
            // μ ≡ s⁻¹(c - offset) (mod m) for some codeword c, i.e. μ - d ∈ C + mZ^N
            let shift: Vec<i64> = offset
                .iter()
                .map(|&o| ((-(o as i128) * inv).rem_euclid(m as i128)) as i64)
                .collect();
            let target: Vec<f64> = y
                .iter()
                .zip(&offset)
                .zip(&shift)
                .map(|((&yj, &o), &d)| (yj - o as f64) / scale as f64 - d as f64)
                .collect();
            let mu = nearest_in_cosets(&target, m as u64, book);
            for ((o, &mj), &d) in offset.iter_mut().zip(&mu).zip(&shift) {
                *o += scale * (mj + d).rem_euclid(m);
            }
            scale *= m;
        }
        Ok(y.iter()
            .zip(&offset)
            .map(|(&yj, &o)| o + scale * round_half_down((yj - o as f64) / scale as f64))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{factor_rational_prime, ChainRing};

    fn f(p: u64) -> Alphabet {
        Alphabet::integers_mod(p, 1).unwrap()
    }

    fn rep_a() -> LatticeDescriptor {
        construction_a(LinearCode::repetition(f(2), 2)).unwrap()
    }

    #[test]
    fn construction_a_repetition() {
        let lat = rep_a();
        for x in -4..4 {
            for y in -4..4 {
                assert_eq!(lat.contains(&[x, y]).unwrap(), (x - y).rem_euclid(2) == 0);
            }
        }
        assert!(!lat.contains(&[1, 0]).unwrap());
        assert!(lat.contains(&[3, 5]).unwrap());
        assert_eq!(
            lat.enumerate_box(&[(0, 1), (0, 1)]).unwrap(),
            vec![vec![0, 0], vec![1, 1]]
        );
        assert!(lat.contains(&[1]).is_err());
    }

    #[test]
    fn full_and_zero_codes() {
        let full = construction_a(LinearCode::full(f(3), 2)).unwrap();
        assert_eq!(full.enumerate_box(&[(0, 2), (0, 2)]).unwrap().len(), 9);
        let zero = construction_a(LinearCode::zero(f(2), 2)).unwrap();
        assert_eq!(
            zero.enumerate_box(&[(0, 2), (0, 2)]).unwrap(),
            vec![vec![0, 0], vec![0, 2], vec![2, 0], vec![2, 2]]
        );
    }

    #[test]
    fn construction_a_rejects_rings() {
        let z4 = Alphabet::Chain(ChainRing::new(2, 2).unwrap());
        assert_eq!(
            construction_a(LinearCode::full(z4, 2)),
            Err(LatticeError::NotPrimeField)
        );
    }

    #[test]
    fn pi_a_example() {
        let lat = construction_pi_a(vec![
            LinearCode::repetition(f(2), 2),
            LinearCode::full(f(3), 2),
        ])
        .unwrap();
        assert_eq!(lat.modulus(), Some(6));
        assert!(lat.contains(&[4, 2]).unwrap());
        assert!(lat.contains(&[6, 6]).unwrap());
        assert!(!lat.contains(&[1, 2]).unwrap());
        assert_eq!(
            construction_pi_a(vec![LinearCode::full(f(2), 2), LinearCode::full(f(2), 2)]),
            Err(LatticeError::RepeatedPrime(2))
        );
        assert!(matches!(
            construction_pi_a(vec![LinearCode::full(f(2), 2), LinearCode::full(f(3), 3)]),
            Err(LatticeError::UnequalLengths { .. })
        ));
    }

    #[test]
    fn pi_d_orders_codes_by_factor() {
        let lat = construction_pi_d(
            6,
            vec![LinearCode::full(f(3), 2), LinearCode::repetition(f(2), 2)],
        )
        .unwrap();
        let Structure::Crt { map, .. } = lat.structure() else {
            panic!()
        };
        assert_eq!(map.moduli(), &[2, 3]);
        assert!(matches!(
            construction_pi_d(6, vec![LinearCode::full(f(2), 2)]),
            Err(LatticeError::FactorMismatch { q: 6 })
        ));
        assert!(construction_pi_d(1, vec![LinearCode::full(f(2), 2)]).is_err());
    }

    #[test]
    fn construction_d_matches_repetition_a() {
        let chain = NestedCodeChain::new(2, vec![vec![1, 1], vec![0, 1]], vec![1]).unwrap();
        let d = construction_d(chain, 1).unwrap();
        let a = rep_a();
        let b = [(-4, 4), (-4, 4)];
        assert_eq!(d.enumerate_box(&b).unwrap(), a.enumerate_box(&b).unwrap());
        let zero = NestedCodeChain::new(2, vec![vec![1, 0], vec![0, 1]], vec![0]).unwrap();
        let dz = construction_d(zero, 1).unwrap();
        assert_eq!(dz.enumerate_box(&[(0, 2), (0, 2)]).unwrap().len(), 4);
        let c = NestedCodeChain::new(2, vec![vec![1, 0], vec![0, 1]], vec![1]).unwrap();
        assert!(matches!(
            construction_d(c, 2),
            Err(LatticeError::LevelsExceedChain { .. })
        ));
    }

    #[test]
    fn quantize_examples() {
        let z = construction_a(LinearCode::full(f(2), 2)).unwrap();
        assert_eq!(z.quantize(&[0.4, -1.6]).unwrap(), vec![0, -2]);
        assert_eq!(rep_a().quantize(&[0.9, 1.1]).unwrap(), vec![1, 1]);
        assert_eq!(rep_a().quantize(&[3.0, -5.0]).unwrap(), vec![3, -5]);
        // tie between (0,0) and (1,1): lexicographically smaller wins
        assert_eq!(rep_a().quantize(&[0.5, 0.5]).unwrap(), vec![0, 0]);
    }

    #[test]
    fn mod_coarse_examples() {
        let lat =
            construction_pi_a(vec![LinearCode::full(f(2), 2), LinearCode::full(f(3), 2)]).unwrap();
        let pair = LatticePair::new(lat).unwrap();
        assert_eq!(pair.mod_coarse(&[7.0, -1.0]).unwrap(), vec![1.0, 5.0]);
        assert_eq!(pair.mod_coarse(&[2.5, 0.0]).unwrap(), vec![2.5, 0.0]);
        let once = pair.mod_coarse(&[-13.25, 40.0]).unwrap();
        assert_eq!(pair.mod_coarse(&once).unwrap(), once);
        assert!(pair.coarse_is_sublattice().unwrap());
    }

    #[test]
    fn multistage_agrees_with_full_quantizer_on_lattice_points() {
        let lat = construction_pi_a(vec![
            LinearCode::repetition(f(2), 2),
            LinearCode::repetition(f(3), 2),
        ])
        .unwrap();
        let pair = LatticePair::new(lat.clone()).unwrap();
        for p in lat.enumerate_box(&[(-6, 6), (-6, 6)]).unwrap() {
            let y: Vec<f64> = p.iter().map(|&x| x as f64 + 0.1).collect();
            assert_eq!(pair.quantize_multistage(&y).unwrap(), p);
            assert_eq!(pair.quantize(&y).unwrap(), p);
        }
    }

    #[test]
    fn a_over_ok_examples() {
        let ring = QuadraticRing::new(-15).unwrap();
        let ideal = *factor_rational_prime(&ring, 17).unwrap().primary();
        let full = construction_a_ok(LinearCode::full(f(17), 2), ideal).unwrap();
        assert!(full
            .contains_ring(&[QuadInt::new(3, -2), QuadInt::new(0, 7)])
            .unwrap());
        let zero = construction_a_ok(LinearCode::zero(f(17), 2), ideal).unwrap();
        assert!(zero
            .contains_ring(&[QuadInt::new(17, 0), QuadInt::new(-6, 1)])
            .unwrap());
        assert!(!zero
            .contains_ring(&[QuadInt::new(1, 0), QuadInt::ZERO])
            .unwrap());
        assert_eq!(
            construction_a_ok(LinearCode::full(f(5), 2), ideal),
            Err(LatticeError::AlphabetMismatch)
        );

        let g = QuadraticRing::new(-1).unwrap();
        let p2 = *factor_rational_prime(&g, 2).unwrap().primary();
        let rep = construction_a_ok(LinearCode::repetition(f(2), 2), p2).unwrap();
        assert!(rep
            .contains_ring(&[QuadInt::new(1, 0), QuadInt::new(0, 1)])
            .unwrap());
        assert!(!rep
            .contains_ring(&[QuadInt::new(1, 0), QuadInt::new(1, 1)])
            .unwrap());

        let real = QuadraticRing::new(5).unwrap();
        let p11 = *factor_rational_prime(&real, 11).unwrap().primary();
        assert_eq!(
            construction_a_ok(LinearCode::full(f(11), 1), p11),
            Err(LatticeError::RealQuadratic)
        );
    }

    #[test]
    fn ideal_nearest_matches_brute_force() {
        for (d, p) in [(-15, 17), (-1, 5), (-3, 7), (-1, 3), (-7, 2)] {
            let ring = QuadraticRing::new(d).unwrap();
            let ideal = *factor_rational_prime(&ring, p).unwrap().primary();
            let lat = IdealLattice::new(&ResidueFieldMap::new(ideal).unwrap());
            for k in 0..200 {
                let t = Complex64::new(
                    (k as f64 * 0.737).sin() * 30.0,
                    (k as f64 * 1.31).cos() * 30.0,
                );
                let got = lat.nearest(t);
                assert!(ideal.contains(got));
                let gd = (ring.embed(got) - t).norm_sqr();
                for a in -60..=60 {
                    for b in -40..=40 {
                        let x = QuadInt::new(a, b);
                        if ideal.contains(x) {
                            assert!(
                                gd <= (ring.embed(x) - t).norm_sqr() + 1e-9,
                                "d={d} p={p} t={t}"
                            );
                        }
                    }
                }
            }
        }
    }
}
