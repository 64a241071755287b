//! Dithered nested-lattice encoding, relay processing and function decoding.
//!
//! Integer lattices carry two independent streams per source on the real and
//! imaginary axes, so a complex codeword is `t = t_I + i·t_Q` with both parts in
//! the fine lattice. Lattices over `𝔒_K` carry a single stream directly.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::rate::{effective_noise_variance, CoefficientRing};
use super::CfError;
use crate::algebra::{CrtMap, FiniteRing, QuadInt, QuadraticRing};
use crate::codes::LinearCode;
use crate::lattices::{mod_q, Ambient, IdealLattice, LatticeDescriptor, LatticePair, Structure};

/// Per-source state: messages indexed `[stream][level]`, the lattice codeword
/// and the dither.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceState {
    pub messages: Vec<Vec<Vec<u64>>>,
    pub point: Vec<QuadInt>,
    pub dither: Vec<Complex64>,
}

/// What a relay recovers from `y′`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    /// `t̂_eq` reduced into the coarse fundamental region.
    pub point: Vec<QuadInt>,
    /// `σ(t̂_eq)` per stream and level.
    pub codewords: Vec<Vec<Vec<u64>>>,
    /// A message solving `G·u = σ(t̂_eq)` per stream and level, when one exists.
    pub messages: Vec<Vec<Option<Vec<u64>>>>,
}

/// `y′` together with the scalar and the predicted effective-noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayOutput {
    pub y_prime: Vec<Complex64>,
    pub alpha: Complex64,
    pub noise_var_analytic: f64,
}

#[derive(Debug, Clone)]
enum Scheme {
    Iq {
        q: u64,
        map: CrtMap,
        codes: Vec<LinearCode>,
    },
    Ring {
        ideal: IdealLattice,
        code: LinearCode,
    },
}

/// A lattice pair prepared for compute-and-forward.
#[derive(Debug, Clone)]
pub struct CfSystem {
    pair: LatticePair,
    scheme: Scheme,
    coefficients: CoefficientRing,
    arith: QuadraticRing,
}

impl CfSystem {
    /// `coefficients` must embed into the lattice ring: integers always, `Z[i]`
    /// for integer lattices, `𝔒_K` for lattices over `𝔒_K`.
    pub fn new(fine: LatticeDescriptor, coefficients: CoefficientRing) -> Result<Self, CfError> {
        let pair = LatticePair::new(fine)?;
        let (scheme, arith) = match pair.fine().ambient() {
            Ambient::Real => {
                let (map, codes) = pair.fine().crt_form().ok_or(CfError::RingMismatch)?;
                let q = map.modulus();
                (Scheme::Iq { q, map, codes }, QuadraticRing::gaussian())
            }
            Ambient::Complex => {
                let ideal = pair
                    .ideal()
                    .expect("complex lattices have an ideal")
                    .clone();
                let Structure::Quadratic { code, .. } = pair.fine().structure() else {
                    unreachable!("complex ambient implies a quadratic structure")
                };
                let ring = *ideal.ring();
                (
                    Scheme::Ring {
                        ideal,
                        code: code.clone(),
                    },
                    ring,
                )
            }
        };
        if let CoefficientRing::Quadratic(r) = coefficients {
            if r != arith {
                return Err(CfError::RingMismatch);
            }
        }
        Ok(CfSystem {
            pair,
            scheme,
            coefficients,
            arith,
        })
    }

    pub fn pair(&self) -> &LatticePair {
        &self.pair
    }

    pub fn coefficients(&self) -> CoefficientRing {
        self.coefficients
    }

    pub fn dimension(&self) -> usize {
        self.pair.fine().dimension()
    }

    pub fn streams(&self) -> usize {
        match self.scheme {
            Scheme::Iq { .. } => 2,
            Scheme::Ring { .. } => 1,
        }
    }

    /// Codes per level (one level for lattices over `𝔒_K`).
    pub fn level_codes(&self) -> Vec<&LinearCode> {
        match &self.scheme {
            Scheme::Iq { codes, .. } => codes.iter().collect(),
            Scheme::Ring { code, .. } => vec![code],
        }
    }

    /// Modulus of the CRT map for integer lattices.
    pub fn crt_map(&self) -> Option<&CrtMap> {
        match &self.scheme {
            Scheme::Iq { map, .. } => Some(map),
            Scheme::Ring { .. } => None,
        }
    }

    /// Centre of the coarse fundamental region (per complex coordinate).
    pub fn center(&self) -> Complex64 {
        match &self.scheme {
            Scheme::Iq { q, .. } => Complex64::new(*q as f64 / 2.0, *q as f64 / 2.0),
            Scheme::Ring { ideal, .. } => ideal.center(),
        }
    }

    /// Per-coordinate complex variance of a uniform point of the region.
    pub fn region_variance(&self) -> f64 {
        match &self.scheme {
            Scheme::Iq { q, .. } => (*q as f64).powi(2) / 6.0,
            Scheme::Ring { ideal, .. } => ideal.second_moment(),
        }
    }

    /// Transmit scaling `γ = √(P / variance)`.
    pub fn gamma(&self, power: f64) -> f64 {
        (power / self.region_variance()).sqrt()
    }

    pub fn embed(&self, x: QuadInt) -> Complex64 {
        self.arith.embed(x)
    }

    fn mod_coarse(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.pair
            .mod_coarse_complex(v)
            .expect("dimension checked by caller")
    }

    /// Uniform draw of messages for every stream and level.
    pub fn random_messages<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<Vec<u64>>> {
        (0..self.streams())
            .map(|_| {
                self.level_codes()
                    .iter()
                    .map(|c| {
                        let size = c.alphabet().size();
                        (0..c.dimension()).map(|_| rng.gen_range(0..size)).collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Uniform dither over the coarse fundamental region.
    pub fn random_dither<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        (0..self.dimension())
            .map(|_| self.uniform_region_point(rng))
            .collect()
    }

    fn uniform_region_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match &self.scheme {
            Scheme::Iq { q, .. } => {
                let q = *q as f64;
                Complex64::new(rng.gen::<f64>() * q, rng.gen::<f64>() * q)
            }
            Scheme::Ring { ideal, .. } => {
                let [b1, b2] = ideal.basis_embedded();
                b1 * rng.gen::<f64>() + b2 * rng.gen::<f64>()
            }
        }
    }

    /// The fine-lattice codeword carrying `messages` (indexed `[stream][level]`).
    pub fn lattice_point(&self, messages: &[Vec<Vec<u64>>]) -> Result<Vec<QuadInt>, CfError> {
        if messages.len() != self.streams() {
            return Err(CfError::MessageShape);
        }
        let codes = self.level_codes();
        let words = messages
            .iter()
            .map(|per_level| {
                if per_level.len() != codes.len() {
                    return Err(CfError::MessageShape);
                }
                codes
                    .iter()
                    .zip(per_level)
                    .map(|(c, w)| c.encode(w).map_err(CfError::from))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let n = self.dimension();
        Ok(match &self.scheme {
            Scheme::Iq { map, .. } => (0..n)
                .map(|j| {
                    let at = |s: usize| {
                        let coords: Vec<u64> = words[s].iter().map(|w| w[j]).collect();
                        map.forward(&coords).map(|x| x as i64)
                    };
                    Ok(QuadInt::new(at(0)?, at(1)?))
                })
                .collect::<Result<Vec<_>, crate::algebra::AlgebraError>>()
                .map_err(crate::lattices::LatticeError::from)?,
            Scheme::Ring { ideal, .. } => words[0][0]
                .iter()
                .map(|&c| ideal.residue().lift(c))
                .collect(),
        })
    }

    /// Fine-lattice membership of a complex codeword.
    pub fn contains(&self, t: &[QuadInt]) -> Result<bool, CfError> {
        Ok(match &self.scheme {
            Scheme::Iq { .. } => {
                let re: Vec<i64> = t.iter().map(|x| x.a).collect();
                let im: Vec<i64> = t.iter().map(|x| x.b).collect();
                self.pair.fine().contains(&re)? && self.pair.fine().contains(&im)?
            }
            Scheme::Ring { .. } => self.pair.fine().contains_ring(t)?,
        })
    }

    pub fn make_source<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SourceState, CfError> {
        let messages = self.random_messages(rng);
        let point = self.lattice_point(&messages)?;
        let dither = self.random_dither(rng);
        Ok(SourceState {
            messages,
            point,
            dither,
        })
    }

    /// `(t - u) mod Λ_c`, in lattice units.
    pub fn encode_source(
        &self,
        point: &[QuadInt],
        dither: &[Complex64],
    ) -> Result<Vec<Complex64>, CfError> {
        self.check_len(point.len())?;
        self.check_len(dither.len())?;
        if !self.contains(point)? {
            return Err(CfError::NotInLattice);
        }
        let diff: Vec<Complex64> = point
            .iter()
            .zip(dither)
            .map(|(&t, &u)| self.embed(t) - u)
            .collect();
        Ok(self.mod_coarse(&diff))
    }

    /// Channel input `γ·((t - u) mod Λ_c - centre)`, with power `P` per coordinate.
    pub fn transmit(&self, state: &SourceState, power: f64) -> Result<Vec<Complex64>, CfError> {
        let gamma = self.gamma(power);
        let c = self.center();
        Ok(self
            .encode_source(&state.point, &state.dither)?
            .into_iter()
            .map(|x| (x - c) * gamma)
            .collect())
    }

    /// `y′ = (α·y/γ + Σ_k a_k (u_k + centre)) mod Λ_c`.
    pub fn relay_process(
        &self,
        y: &[Complex64],
        a: &[QuadInt],
        dithers: &[Vec<Complex64>],
        h: &[Complex64],
        power: f64,
        alpha: Complex64,
    ) -> Result<RelayOutput, CfError> {
        self.check_len(y.len())?;
        if a.len() != dithers.len() || a.len() != h.len() {
            return Err(CfError::DimensionMismatch {
                expected: h.len(),
                got: a.len(),
            });
        }
        let gamma = self.gamma(power);
        let c = self.center();
        let raw: Vec<Complex64> = (0..y.len())
            .map(|j| {
                let shift: Complex64 = a
                    .iter()
                    .zip(dithers)
                    .map(|(&ak, u)| self.coeff(ak) * (u[j] + c))
                    .sum();
                alpha * y[j] / gamma + shift
            })
            .collect();
        let emb: Vec<Complex64> = a.iter().map(|&x| self.coeff(x)).collect();
        Ok(RelayOutput {
            y_prime: self.mod_coarse(&raw),
            alpha,
            noise_var_analytic: effective_noise_variance(h, &emb, alpha, power),
        })
    }

    fn coeff(&self, a: QuadInt) -> Complex64 {
        self.coefficients.embed(a)
    }

    /// Quantizes `y′` to the fine lattice, reduces modulo `Λ_c` and reads off
    /// the per-level codewords and messages. With `multistage` the integer
    /// streams are decoded one CRT level at a time.
    pub fn decode_function(
        &self,
        y_prime: &[Complex64],
        multistage: bool,
    ) -> Result<Decoded, CfError> {
        self.check_len(y_prime.len())?;
        match &self.scheme {
            Scheme::Iq { q, map, codes } => {
                let mut parts = Vec::with_capacity(2);
                for s in 0..2 {
                    let comp: Vec<f64> = y_prime
                        .iter()
                        .map(|z| if s == 0 { z.re } else { z.im })
                        .collect();
                    let lam = if multistage {
                        self.pair.quantize_multistage(&comp)?
                    } else {
                        self.pair.quantize(&comp)?
                    };
                    parts.push(
                        lam.iter()
                            .map(|x| x.rem_euclid(*q as i64))
                            .collect::<Vec<_>>(),
                    );
                }
                let point: Vec<QuadInt> = parts[0]
                    .iter()
                    .zip(&parts[1])
                    .map(|(&a, &b)| QuadInt::new(a, b))
                    .collect();
                let mut codewords = Vec::new();
                let mut messages = Vec::new();
                for part in &parts {
                    let mut cw = Vec::new();
                    let mut ms = Vec::new();
                    for (l, code) in codes.iter().enumerate() {
                        let word: Vec<u64> = part.iter().map(|&x| map.sigma_level(x, l)).collect();
                        ms.push(code.solve(&word)?);
                        cw.push(word);
                    }
                    codewords.push(cw);
                    messages.push(ms);
                }
                Ok(Decoded {
                    point,
                    codewords,
                    messages,
                })
            }
            Scheme::Ring { ideal, code } => {
                let lam = self.pair.quantize_ring(y_prime)?;
                let point: Vec<QuadInt> = lam.iter().map(|&x| ideal.reduce_exact(x)).collect();
                let word: Vec<u64> = point.iter().map(|&x| ideal.residue().reduce(x)).collect();
                let msg = code.solve(&word)?;
                Ok(Decoded {
                    point,
                    codewords: vec![vec![word]],
                    messages: vec![vec![msg]],
                })
            }
        }
    }

    /// `b^l_k = σ_l(a_k)` per level, for real and imaginary parts
    /// (integer lattices), or the residue of `a_k` (lattices over `𝔒_K`).
    pub fn level_coefficients(&self, a: &[QuadInt]) -> Vec<Vec<(u64, u64)>> {
        match &self.scheme {
            Scheme::Iq { map, .. } => (0..map.levels())
                .map(|l| {
                    a.iter()
                        .map(|x| (map.sigma_level(x.a, l), map.sigma_level(x.b, l)))
                        .collect()
                })
                .collect(),
            Scheme::Ring { ideal, .. } => {
                vec![a.iter().map(|&x| (ideal.residue().reduce(x), 0)).collect()]
            }
        }
    }

    /// Some `b^l_k` is a nonzero zero divisor of its level's alphabet.
    pub fn zero_divisor_flag(&self, a: &[QuadInt]) -> bool {
        let codes = self.level_codes();
        self.level_coefficients(a)
            .iter()
            .zip(codes)
            .any(|(bs, code)| {
                let ring = code.alphabet();
                bs.iter()
                    .any(|&(re, im)| [re, im].iter().any(|&b| b != 0 && !ring.is_unit(b)))
            })
    }

    /// The function `⊕_k b_k ⊙ w_k` computed directly over the message
    /// alphabets from the true messages, indexed `[stream][level]`.
    pub fn expected_function(
        &self,
        a: &[QuadInt],
        sources: &[&[Vec<Vec<u64>>]],
    ) -> Vec<Vec<Vec<u64>>> {
        let codes = self.level_codes();
        let bs = self.level_coefficients(a);
        (0..self.streams())
            .map(|s| {
                codes
                    .iter()
                    .enumerate()
                    .map(|(l, code)| {
                        let ring = code.alphabet();
                        let mut acc = vec![0u64; code.dimension()];
                        for (k, msgs) in sources.iter().enumerate() {
                            let (re, im) = bs[l][k];
                            // (re + i·im)(w_I + i·w_Q): I gets re·w_I - im·w_Q, Q gets re·w_Q + im·w_I
                            let same = &msgs[s][l];
                            let other = if self.streams() == 2 {
                                &msgs[1 - s][l]
                            } else {
                                same
                            };
                            for (j, v) in acc.iter_mut().enumerate() {
                                let mut term = ring.mul(re, same[j]);
                                if self.streams() == 2 {
                                    let cross = ring.mul(im, other[j]);
                                    term = if s == 0 {
                                        ring.sub(term, cross)
                                    } else {
                                        ring.add(term, cross)
                                    };
                                }
                                *v = ring.add(*v, term);
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// Decoding succeeded when every recovered codeword equals the encoding of
    /// the expected function.
    pub fn decode_matches(
        &self,
        decoded: &Decoded,
        expected: &[Vec<Vec<u64>>],
    ) -> Result<bool, CfError> {
        let codes = self.level_codes();
        for (s, per_level) in expected.iter().enumerate() {
            for (l, u) in per_level.iter().enumerate() {
                if decoded.codewords[s][l] != codes[l].encode(u)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Noiseless relay with `h = a`, `α = 1` and fresh dithers, decoded level by
    /// level; returns the decoded codewords and the directly computed function.
    pub fn multistage_roundtrip(
        &self,
        sources: &[SourceState],
        a: &[QuadInt],
        power: f64,
        multistage: bool,
    ) -> Result<(Decoded, Vec<Vec<Vec<u64>>>), CfError> {
        let h: Vec<Complex64> = a.iter().map(|&x| self.coeff(x)).collect();
        let y = self.channel(&h, sources, power, None)?;
        let dithers: Vec<Vec<Complex64>> = sources.iter().map(|s| s.dither.clone()).collect();
        let out = self.relay_process(&y, a, &dithers, &h, power, Complex64::new(1.0, 0.0))?;
        let decoded = self.decode_function(&out.y_prime, multistage)?;
        let msgs: Vec<&[Vec<Vec<u64>>]> = sources.iter().map(|s| s.messages.as_slice()).collect();
        Ok((decoded, self.expected_function(a, &msgs)))
    }

    /// `y = Σ_k h_k x_k + z`; `noise` supplies `z` (none means noiseless).
    pub fn channel(
        &self,
        h: &[Complex64],
        sources: &[SourceState],
        power: f64,
        noise: Option<&[Complex64]>,
    ) -> Result<Vec<Complex64>, CfError> {
        if h.len() != sources.len() {
            return Err(CfError::DimensionMismatch {
                expected: sources.len(),
                got: h.len(),
            });
        }
        let xs = sources
            .iter()
            .map(|s| self.transmit(s, power))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((0..self.dimension())
            .map(|j| {
                let sig: Complex64 = h.iter().zip(&xs).map(|(&hk, x)| hk * x[j]).sum();
                sig + noise.map_or(Complex64::new(0.0, 0.0), |z| z[j])
            })
            .collect())
    }

    /// Sample mean of `|α·y - Σ a_k x_k|²` over `samples` channel uses with
    /// dithered (uniform) transmit symbols and unit complex Gaussian noise.
    pub fn sample_effective_noise<R: Rng + ?Sized>(
        &self,
        h: &[Complex64],
        a: &[QuadInt],
        alpha: Complex64,
        power: f64,
        samples: usize,
        rng: &mut R,
    ) -> f64 {
        let gamma = self.gamma(power);
        let c = self.center();
        let emb: Vec<Complex64> = a.iter().map(|&x| self.coeff(x)).collect();
        let mut acc = 0.0;
        for _ in 0..samples {
            let mut zeq = alpha * complex_normal(rng);
            for (&hk, &ak) in h.iter().zip(&emb) {
                let x = (self.uniform_region_point(rng) - c) * gamma;
                zeq += (alpha * hk - ak) * x;
            }
            acc += zeq.norm_sqr();
        }
        acc / samples as f64
    }

    fn check_len(&self, got: usize) -> Result<(), CfError> {
        if got != self.dimension() {
            return Err(CfError::DimensionMismatch {
                expected: self.dimension(),
                got,
            });
        }
        Ok(())
    }
}

/// A draw from the circularly-symmetric complex Gaussian with unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Real `(t - u) mod qZ^N`, used directly for integer vectors.
pub fn encode_real(t: &[i64], u: &[f64], q: u64) -> Vec<f64> {
    let diff: Vec<f64> = t.iter().zip(u).map(|(&a, &b)| a as f64 - b).collect();
    mod_q(&diff, q)
}
