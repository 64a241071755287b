//! Linear codes over prime fields, chain rings `Z/p^eZ` and `F_{p^2}`; nested
//! chains of binary-style codes and their lift to a single chain-ring code.
//!
//! Generator matrices are stored one generator per row (`n × N`). A message
//! `w` of length `n` encodes to `Σ_i w_i · row_i`, a word of length `N`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, Alphabet, FiniteRing, PrimeField};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("expected a vector of length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("entry {value} is outside the alphabet of size {size}")]
    EntryOutOfRange { value: u64, size: u64 },
    #[error("generator matrix has rank {rank} but {rows} rows over a field")]
    RankDeficient { rank: usize, rows: usize },
    #[error("message length {n} exceeds block length {length}")]
    TooManyRows { n: usize, length: usize },
    #[error("nested-chain basis does not span F_p^N")]
    BasisNotFullRank,
    #[error("chain dimensions must be nondecreasing")]
    DimsNotSorted,
    #[error("chain dimension {dim} exceeds block length {length}")]
    DimExceedsLength { dim: usize, length: usize },
    #[error("a nested chain needs at least one level")]
    NoLevels,
    #[error("the lift needs at least one level")]
    ZeroLevels,
    #[error("codebook enumeration of {0} messages is too large")]
    CodebookTooLarge(u128),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Upper bound on the number of messages [`LinearCode::codebook`] will enumerate.
pub const MAX_ENUMERATION: u128 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearCode {
    alphabet: Alphabet,
    length: usize,
    rows: Vec<Vec<u64>>,
}

impl LinearCode {
    /// Over a field the rows must be linearly independent; over a chain ring
    /// any generating set is accepted.
    pub fn new(alphabet: Alphabet, length: usize, rows: Vec<Vec<u64>>) -> Result<Self, CodeError> {
        let size = alphabet.size();
        for row in &rows {
            if row.len() != length {
                return Err(CodeError::LengthMismatch {
                    expected: length,
                    got: row.len(),
                });
            }
            if let Some(&value) = row.iter().find(|&&v| v >= size) {
                return Err(CodeError::EntryOutOfRange { value, size });
            }
        }
        let code = LinearCode {
            alphabet,
            length,
            rows,
        };
        if alphabet.is_field() {
            if code.rows.len() > length {
                return Err(CodeError::TooManyRows {
                    n: code.rows.len(),
                    length,
                });
            }
            let rank = code.rank();
            if rank != code.rows.len() {
                return Err(CodeError::RankDeficient {
                    rank,
                    rows: code.rows.len(),
                });
            }
        }
        Ok(code)
    }

    /// Builds from a row-major list of `n·N` integers reduced into the alphabet.
    pub fn from_row_major(
        alphabet: Alphabet,
        length: usize,
        n: usize,
        data: &[i64],
    ) -> Result<Self, CodeError> {
        if data.len() != n * length {
            return Err(CodeError::LengthMismatch {
                expected: n * length,
                got: data.len(),
            });
        }
        let size = alphabet.size() as i64;
        let rows = data
            .chunks(length.max(1))
            .take(n)
            .map(|row| {
                row.iter()
                    .map(|&v| {
                        if !(0..size).contains(&v) {
                            Err(CodeError::EntryOutOfRange {
                                value: v as u64,
                                size: size as u64,
                            })
                        } else {
                            Ok(v as u64)
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(alphabet, length, rows)
    }

    /// The full code `R^N`.
    pub fn full(alphabet: Alphabet, length: usize) -> Self {
        let rows = (0..length)
            .map(|i| (0..length).map(|j| u64::from(i == j)).collect())
            .collect();
        LinearCode {
            alphabet,
            length,
            rows,
        }
    }

    /// The zero code `{0}`.
    pub fn zero(alphabet: Alphabet, length: usize) -> Self {
        LinearCode {
            alphabet,
            length,
            rows: Vec::new(),
        }
    }

    /// The `(N, 1)` repetition code.
    pub fn repetition(alphabet: Alphabet, length: usize) -> Self {
        LinearCode {
            alphabet,
            length,
            rows: vec![vec![1; length]],
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Block length `N`.
    pub fn length(&self) -> usize {
        self.length
    }

    /// Number of generator rows `n`.
    pub fn dimension(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    pub fn encode(&self, message: &[u64]) -> Result<Vec<u64>, CodeError> {
        if message.len() != self.rows.len() {
            return Err(CodeError::LengthMismatch {
                expected: self.rows.len(),
                got: message.len(),
            });
        }
        let r = &self.alphabet;
        let mut word = vec![0u64; self.length];
        for (&w, row) in message.iter().zip(&self.rows) {
            let w = w % r.size();
            if w == 0 {
                continue;
            }
            for (x, &g) in word.iter_mut().zip(row) {
                *x = r.add(*x, r.mul(w, g));
            }
        }
        Ok(word)
    }

    /// A message `w` with `encode(w) = word`, or `None` if `word ∉ C`.
    pub fn solve(&self, word: &[u64]) -> Result<Option<Vec<u64>>, CodeError> {
        if word.len() != self.length {
            return Err(CodeError::LengthMismatch {
                expected: self.length,
                got: word.len(),
            });
        }
        let size = self.alphabet.size();
        let system: Vec<Vec<u64>> = (0..self.length)
            .map(|j| self.rows.iter().map(|row| row[j]).collect())
            .collect();
        let rhs: Vec<u64> = word.iter().map(|&x| x % size).collect();
        Ok(solve_system(&self.alphabet, system, rhs, self.rows.len()).0)
    }

    pub fn contains(&self, word: &[u64]) -> Result<bool, CodeError> {
        Ok(self.solve(word)?.is_some())
    }

    pub fn rank(&self) -> usize {
        let system: Vec<Vec<u64>> = (0..self.length)
            .map(|j| self.rows.iter().map(|row| row[j]).collect())
            .collect();
        solve_system(
            &self.alphabet,
            system,
            vec![0; self.length],
            self.rows.len(),
        )
        .1
    }

    /// Number of messages, `|R|^n`.
    pub fn message_count(&self) -> u128 {
        (self.alphabet.size() as u128).saturating_pow(self.rows.len() as u32)
    }

    /// All messages in lexicographic order.
    pub fn messages(&self) -> Result<impl Iterator<Item = Vec<u64>> + '_, CodeError> {
        let count = self.message_count();
        if count > MAX_ENUMERATION {
            return Err(CodeError::CodebookTooLarge(count));
        }
        let size = self.alphabet.size();
        let n = self.rows.len();
        Ok((0..count as u64).map(move |mut idx| {
            let mut w = vec![0u64; n];
            for slot in w.iter_mut().rev() {
                *slot = idx % size;
                idx /= size;
            }
            w
        }))
    }

    /// The distinct codewords, sorted.
    pub fn codebook(&self) -> Result<Vec<Vec<u64>>, CodeError> {
        let set: BTreeSet<Vec<u64>> = self
            .messages()?
            .map(|w| self.encode(&w).expect("message length matches"))
            .collect();
        Ok(set.into_iter().collect())
    }
}

/// Solves `A w = b` over a local finite ring by pivoting on minimal valuation
/// with row and column operations (Smith-style diagonalisation). Returns a
/// solution (if any) and the number of nonzero pivots.
fn solve_system<R: FiniteRing>(
    ring: &R,
    mut a: Vec<Vec<u64>>,
    mut b: Vec<u64>,
    cols: usize,
) -> (Option<Vec<u64>>, usize) {
    let rows = a.len();
    // w = colop · y
    let mut colop: Vec<Vec<u64>> = (0..cols)
        .map(|i| (0..cols).map(|j| u64::from(i == j)).collect())
        .collect();
    let mut rank = 0;
    for k in 0..rows.min(cols) {
        let mut best: Option<(u32, usize, usize)> = None;
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, &v) in row.iter().enumerate().skip(k) {
                if let Some(val) = ring.valuation(v) {
                    if best.is_none_or(|(bv, _, _)| val < bv) {
                        best = Some((val, i, j));
                    }
                }
            }
        }
        let Some((_, pi, pj)) = best else { break };
        a.swap(k, pi);
        b.swap(k, pi);
        for row in a.iter_mut() {
            row.swap(k, pj);
        }
        for row in colop.iter_mut() {
            row.swap(k, pj);
        }
        let pivot = a[k][k];
        for i in k + 1..rows {
            if a[i][k] == 0 {
                continue;
            }
            let f = ring
                .div_exact(a[i][k], pivot)
                .expect("pivot has minimal valuation");
            for j in k..cols {
                let t = ring.mul(f, a[k][j]);
                a[i][j] = ring.sub(a[i][j], t);
            }
            b[i] = ring.sub(b[i], ring.mul(f, b[k]));
        }
        for j in k + 1..cols {
            if a[k][j] == 0 {
                continue;
            }
            let f = ring
                .div_exact(a[k][j], pivot)
                .expect("pivot has minimal valuation");
            for row in a.iter_mut() {
                let t = ring.mul(f, row[k]);
                row[j] = ring.sub(row[j], t);
            }
            for row in colop.iter_mut() {
                let t = ring.mul(f, row[k]);
                row[j] = ring.sub(row[j], t);
            }
        }
        rank = k + 1;
    }
    let mut y = vec![0u64; cols];
    for k in 0..rank {
        match ring.div_exact(b[k], a[k][k]) {
            Some(v) => y[k] = v,
            None => return (None, rank),
        }
    }
    if b[rank..].iter().any(|&v| v != 0) {
        return (None, rank);
    }
    let w = colop
        .iter()
        .map(|row| {
            row.iter()
                .zip(&y)
                .fold(0, |acc, (&c, &v)| ring.add(acc, ring.mul(c, v)))
        })
        .collect();
    (Some(w), rank)
}

/// Nested codes `C^1 ⊆ … ⊆ C^L ⊆ F_p^N`, level `l` generated by the first
/// `n^l` vectors of a fixed basis of `F_p^N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedCodeChain {
    field: PrimeField,
    basis: Vec<Vec<u64>>,
    dims: Vec<usize>,
}

impl NestedCodeChain {
    pub fn new(p: u64, basis: Vec<Vec<u64>>, dims: Vec<usize>) -> Result<Self, CodeError> {
        let field = PrimeField::new(p)?;
        let length = basis.len();
        if dims.is_empty() {
            return Err(CodeError::NoLevels);
        }
        if dims.windows(2).any(|w| w[0] > w[1]) {
            return Err(CodeError::DimsNotSorted);
        }
        if let Some(&dim) = dims.iter().find(|&&d| d > length) {
            return Err(CodeError::DimExceedsLength { dim, length });
        }
        let basis_code =
            LinearCode::new(Alphabet::Prime(field), length, basis).map_err(|e| match e {
                CodeError::RankDeficient { .. } | CodeError::TooManyRows { .. } => {
                    CodeError::BasisNotFullRank
                }
                other => other,
            })?;
        if basis_code.rank() != length {
            return Err(CodeError::BasisNotFullRank);
        }
        Ok(NestedCodeChain {
            field,
            basis: basis_code.rows,
            dims,
        })
    }

    pub fn prime(&self) -> u64 {
        self.field.modulus()
    }

    pub fn length(&self) -> usize {
        self.basis.len()
    }

    pub fn levels(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn basis(&self) -> &[Vec<u64>] {
        &self.basis
    }

    /// Dimension of level `l` (0-based); levels past the top reuse the top.
    pub fn dim(&self, level: usize) -> usize {
        self.dims[level.min(self.dims.len() - 1)]
    }

    /// `C^{l+1}` as a code over `F_p`.
    pub fn level_code(&self, level: usize) -> LinearCode {
        LinearCode {
            alphabet: Alphabet::Prime(self.field),
            length: self.length(),
            rows: self.basis[..self.dim(level)].to_vec(),
        }
    }
}

/// The code over `Z/p^eZ` with rows `p^{l-1} g_i` (`i ≤ n^l`, `l = 1..e`), whose
/// codebook is `{ Σ_l p^{l-1} c^l mod p^e : c^l ∈ C^l }`. Levels beyond the
/// chain's depth reuse its top level.
pub fn lift_chain_to_ring_code(
    chain: &NestedCodeChain,
    levels: u32,
) -> Result<LinearCode, CodeError> {
    if levels == 0 {
        return Err(CodeError::ZeroLevels);
    }
    let p = chain.prime();
    let alphabet = Alphabet::integers_mod(p, levels)?;
    let modulus = alphabet.size();
    let mut rows = Vec::new();
    for l in 0..levels as usize {
        let scale = p.pow(l as u32);
        for g in &chain.basis[..chain.dim(l)] {
            rows.push(g.iter().map(|&x| x * scale % modulus).collect());
        }
    }
    LinearCode::new(alphabet, chain.length(), rows)
}
