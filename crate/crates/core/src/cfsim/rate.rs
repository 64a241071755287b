//! The computation rate and the search for the best coefficient vector.

use num_complex::Complex64;

use super::CfError;
use crate::algebra::{QuadInt, QuadraticRing};

/// Values of `‖a‖² - P|hᴴa|²/(1+P‖h‖²)` at or below this count as zero.
pub const RATE_TOLERANCE: f64 = 1e-12;

/// Upper bound on the number of candidates visited by [`best_coefficients`].
pub const MAX_SEARCH_POINTS: usize = 2_000_000;

/// Ring the coefficient vector `a` is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientRing {
    Integer,
    /// `Z[ξ]`; `QuadraticRing::gaussian()` gives `Z[i]`.
    Quadratic(QuadraticRing),
}

impl CoefficientRing {
    pub fn gaussian() -> Self {
        CoefficientRing::Quadratic(QuadraticRing::gaussian())
    }

    pub fn embed(&self, x: QuadInt) -> Complex64 {
        match self {
            CoefficientRing::Integer => Complex64::new(x.a as f64, 0.0),
            CoefficientRing::Quadratic(r) => r.embed(x),
        }
    }

    pub fn embed_all(&self, a: &[QuadInt]) -> Vec<Complex64> {
        a.iter().map(|&x| self.embed(x)).collect()
    }

    /// Units of the ring, as ring elements.
    pub fn units(&self) -> Vec<QuadInt> {
        match self {
            CoefficientRing::Integer => vec![QuadInt::ONE, QuadInt::integer(-1)],
            CoefficientRing::Quadratic(r) => {
                let mut out = Vec::new();
                for a in -2..=2 {
                    for b in -2..=2 {
                        let x = QuadInt::new(a, b);
                        if r.norm(x) == 1 {
                            out.push(x);
                        }
                    }
                }
                out
            }
        }
    }

    fn mul(&self, x: QuadInt, y: QuadInt) -> QuadInt {
        match self {
            CoefficientRing::Integer => QuadInt::integer(x.a * y.a),
            CoefficientRing::Quadratic(r) => r.mul(x, y),
        }
    }

    /// Ring element nearest to `z` (integers round the real part only).
    pub fn round(&self, z: Complex64) -> QuadInt {
        match self {
            CoefficientRing::Integer => QuadInt::integer(z.re.round() as i64),
            CoefficientRing::Quadratic(r) => {
                let xi = r.xi_value();
                let b0 = (z.im / xi.im).round() as i64;
                let a0 = (z.re - b0 as f64 * xi.re).round() as i64;
                let mut best = QuadInt::new(a0, b0);
                let mut best_d = (r.embed(best) - z).norm_sqr();
                for db in -1..=1 {
                    for da in -1..=1 {
                        let x = QuadInt::new(a0 + da, b0 + db);
                        let d = (r.embed(x) - z).norm_sqr();
                        if d < best_d - 1e-12 || (d <= best_d + 1e-12 && x < best) {
                            best = x;
                            best_d = d;
                        }
                    }
                }
                best
            }
        }
    }

    fn basis(&self) -> Vec<Complex64> {
        match self {
            CoefficientRing::Integer => vec![Complex64::new(1.0, 0.0)],
            CoefficientRing::Quadratic(r) => vec![Complex64::new(1.0, 0.0), r.xi_value()],
        }
    }
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn herm(h: &[Complex64], a: &[Complex64]) -> Complex64 {
    h.iter().zip(a).map(|(x, y)| x.conj() * y).sum()
}

fn check_inputs(h: &[Complex64], a: &[Complex64], power: f64) -> Result<(), CfError> {
    if h.len() != a.len() {
        return Err(CfError::DimensionMismatch {
            expected: h.len(),
            got: a.len(),
        });
    }
    if !power.is_finite() || power <= 0.0 {
        return Err(CfError::NonPositivePower(power));
    }
    Ok(())
}

/// `‖a‖² - P|hᴴa|²/(1+P‖h‖²)`, the reciprocal of `2^R` before clamping.
pub fn rate_denominator(h: &[Complex64], a: &[Complex64], power: f64) -> f64 {
    let inner = herm(h, a).norm_sqr();
    norm2(a) - power * inner / (1.0 + power * norm2(h))
}

/// `R(h, a) = log2⁺(1 / (‖a‖² - P|hᴴa|²/(1+P‖h‖²)))` in bits per complex
/// channel use; `+∞` when the denominator vanishes.
pub fn computation_rate(h: &[Complex64], a: &[Complex64], power: f64) -> Result<f64, CfError> {
    check_inputs(h, a, power)?;
    if a.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(CfError::ZeroCoefficients);
    }
    let f = rate_denominator(h, a, power);
    if f <= RATE_TOLERANCE * norm2(a).max(1.0) {
        return Ok(f64::INFINITY);
    }
    Ok((-f.log2()).max(0.0))
}

/// The MMSE scalar `α = P·hᴴa / (1 + P‖h‖²)`.
pub fn mmse_alpha(h: &[Complex64], a: &[Complex64], power: f64) -> Complex64 {
    herm(h, a) * power / (1.0 + power * norm2(h))
}

/// Variance of `αy - Σ a_k x_k`: `|α|² + P‖αh - a‖²`.
pub fn effective_noise_variance(
    h: &[Complex64],
    a: &[Complex64],
    alpha: Complex64,
    power: f64,
) -> f64 {
    let mismatch: f64 = h
        .iter()
        .zip(a)
        .map(|(&hk, &ak)| (alpha * hk - ak).norm_sqr())
        .sum();
    alpha.norm_sqr() + power * mismatch
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub a: Vec<QuadInt>,
    pub rate: f64,
    /// Set when candidates were dropped by the norm cap or the point budget.
    pub truncated: bool,
}

/// Exhaustive search for the coefficient vector maximizing the computation
/// rate. Every `a` with positive rate satisfies `aᴴ G a < 1` for
/// `G = I - P hhᴴ/(1+P‖h‖²)`, so the search enumerates that ellipsoid
/// (closed, which always holds some unit vector) by Fincke-Pohst. Vectors that
/// differ by a unit factor are visited once. Ties go to the smaller `‖a‖²`,
/// then to the lexicographically smaller vector. `max_norm_cap` bounds `‖a‖²`.
pub fn best_coefficients(
    h: &[Complex64],
    power: f64,
    ring: CoefficientRing,
    max_norm_cap: f64,
) -> Result<SearchOutcome, CfError> {
    check_inputs(h, h, power)?;
    if norm2(h) == 0.0 {
        return Err(CfError::ZeroChannel);
    }
    let k = h.len();
    let c = power / (1.0 + power * norm2(h));
    let per = ring.basis();
    // real basis vectors of the coefficient lattice inside C^K
    let basis: Vec<(usize, Complex64)> = (0..k)
        .flat_map(|i| per.iter().map(move |&b| (i, b)))
        .collect();
    let n = basis.len();
    let hb: Vec<Complex64> = basis.iter().map(|&(i, b)| h[i].conj() * b).collect();
    let mut gram = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let ident = if basis[i].0 == basis[j].0 {
                (basis[i].1.conj() * basis[j].1).re
            } else {
                0.0
            };
            gram[i][j] = ident - c * (hb[i].conj() * hb[j]).re;
        }
    }
    let r = cholesky_upper(&gram).ok_or(CfError::ZeroChannel)?;

    let units = ring.units();
    let dim = per.len();
    let mut best: Option<(f64, f64, Vec<QuadInt>)> = None;
    let mut truncated = false;
    let mut visited = 0usize;
    let mut x = vec![0i64; n];
    fincke_pohst(&r, 1.0 + 1e-9, n, 0.0, &mut x, &mut |x| {
        visited += 1;
        if visited > MAX_SEARCH_POINTS {
            truncated = true;
            return false;
        }
        if x.iter().all(|&v| v == 0) {
            return true;
        }
        let a: Vec<QuadInt> = (0..k)
            .map(|i| QuadInt::new(x[i * dim], if dim == 2 { x[i * dim + 1] } else { 0 }))
            .collect();
        if canonical(&ring, &units, &a) != a {
            return true;
        }
        let emb = ring.embed_all(&a);
        let norm = norm2(&emb);
        if norm > max_norm_cap {
            truncated = true;
            return true;
        }
        let f = rate_denominator(h, &emb, power);
        let better = match &best {
            None => true,
            Some((bf, bn, ba)) => {
                f < bf - RATE_TOLERANCE
                    || (f <= bf + RATE_TOLERANCE
                        && (norm < bn - 1e-9 || (norm <= bn + 1e-9 && a < *ba)))
            }
        };
        if better {
            best = Some((f, norm, a));
        }
        true
    });
    let (_, _, a) = best.ok_or(CfError::SearchEmpty)?;
    let rate = computation_rate(h, &ring.embed_all(&a), power)?;
    Ok(SearchOutcome { a, rate, truncated })
}

/// Representative of `{u·a : u a unit}`: the lexicographically largest.
fn canonical(ring: &CoefficientRing, units: &[QuadInt], a: &[QuadInt]) -> Vec<QuadInt> {
    units
        .iter()
        .map(|&u| a.iter().map(|&x| ring.mul(u, x)).collect::<Vec<_>>())
        .max()
        .expect("rings have units")
}

fn cholesky_upper(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut r = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= r[k][j] * r[k][j];
        }
        if d <= 0.0 {
            return None;
        }
        r[j][j] = d.sqrt();
        for i in j + 1..n {
            let mut s = a[j][i];
            for k in 0..j {
                s -= r[k][j] * r[k][i];
            }
            r[j][i] = s / r[j][j];
        }
    }
    Some(r)
}

/// Visits every integer `x` with `‖Rx‖² ≤ bound`, fixing coordinates from the
/// last one down. `visit` returns `false` to stop.
fn fincke_pohst(
    r: &[Vec<f64>],
    bound: f64,
    level: usize,
    used: f64,
    x: &mut Vec<i64>,
    visit: &mut dyn FnMut(&[i64]) -> bool,
) -> bool {
    if level == 0 {
        return visit(x);
    }
    let i = level - 1;
    let n = r.len();
    let shift: f64 = (i + 1..n).map(|j| r[i][j] * x[j] as f64).sum();
    let center = -shift / r[i][i];
    let room = (bound - used).max(0.0).sqrt() / r[i][i];
    let lo = (center - room).ceil() as i64;
    let hi = (center + room).floor() as i64;
    for v in lo..=hi {
        x[i] = v;
        let t = r[i][i] * v as f64 + shift;
        let next = used + t * t;
        if next <= bound && !fincke_pohst(r, bound, i, next, x, visit) {
            x[i] = 0;
            return false;
        }
    }
    x[i] = 0;
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ints(v: &[i64]) -> Vec<QuadInt> {
        v.iter().map(|&x| QuadInt::integer(x)).collect()
    }

    #[test]
    fn closed_forms() {
        assert!((computation_rate(&[c(1.0)], &[c(1.0)], 3.0).unwrap() - 2.0).abs() < 1e-12);
        let r = computation_rate(&[c(1.0), c(1.0)], &[c(1.0), c(1.0)], 1.0).unwrap();
        assert!((r - 1.5f64.log2()).abs() < 1e-12);
        // a orthogonal to h with unit norm sits on the clamp boundary
        assert_eq!(
            computation_rate(&[c(1.0), c(0.0)], &[c(0.0), c(1.0)], 5.0).unwrap(),
            0.0
        );
        for p in [1.0f64, 3.0, 7.0, 15.0] {
            let r = computation_rate(&[c(1.0)], &[c(1.0)], p).unwrap();
            assert!((r - (1.0 + p).log2()).abs() < 1e-9);
        }
        assert_eq!(
            computation_rate(&[c(1.0)], &[c(0.0)], 1.0),
            Err(CfError::ZeroCoefficients)
        );
        assert!(computation_rate(&[c(1.0)], &[c(1.0)], 0.0).is_err());
    }

    #[test]
    fn mmse_minimizes_variance() {
        let h = [Complex64::new(0.3, -1.2), Complex64::new(0.8, 0.1)];
        let a = [c(1.0), c(1.0)];
        let alpha = mmse_alpha(&h, &a, 4.0);
        let v = effective_noise_variance(&h, &a, alpha, 4.0);
        assert!(v <= effective_noise_variance(&h, &a, c(1.0), 4.0));
        for dr in [-0.01, 0.01] {
            for di in [-0.01, 0.01] {
                let other = alpha + Complex64::new(dr, di);
                assert!(v <= effective_noise_variance(&h, &a, other, 4.0));
            }
        }
        // the minimum equals P times the rate denominator
        assert!((v - 4.0 * rate_denominator(&h, &a, 4.0)).abs() < 1e-12);
    }

    #[test]
    fn search_examples() {
        let one = best_coefficients(&[c(1.0)], 5.0, CoefficientRing::Integer, 1e6).unwrap();
        assert_eq!(one.a, ints(&[1]));
        let g = best_coefficients(&[c(1.0)], 5.0, CoefficientRing::gaussian(), 1e6).unwrap();
        assert_eq!(g.a, ints(&[1]));
        let two =
            best_coefficients(&[c(1.0), c(1.0)], 10.0, CoefficientRing::Integer, 1e6).unwrap();
        assert_eq!(two.a, ints(&[1, 1]));
        assert!(!two.truncated);
    }

    #[test]
    fn search_dominates_brute_force() {
        let hs = [
            vec![Complex64::new(1.3, 0.2), Complex64::new(-0.7, 0.9)],
            vec![
                Complex64::new(2.1, -0.4),
                Complex64::new(0.5, 0.5),
                Complex64::new(-1.0, 0.3),
            ],
        ];
        for h in &hs {
            for p in [1.0, 10.0, 100.0] {
                let best = best_coefficients(h, p, CoefficientRing::Integer, 1e9).unwrap();
                let bound = 1.0 + p * norm2(h);
                let r = bound.sqrt().ceil() as i64;
                let mut idx = vec![-r; h.len()];
                loop {
                    let a: Vec<Complex64> = idx.iter().map(|&x| c(x as f64)).collect();
                    if norm2(&a) > 0.0 && norm2(&a) < bound {
                        assert!(best.rate + 1e-9 >= computation_rate(h, &a, p).unwrap());
                    }
                    let mut j = 0;
                    while j < idx.len() {
                        idx[j] += 1;
                        if idx[j] <= r {
                            break;
                        }
                        idx[j] = -r;
                        j += 1;
                    }
                    if j == idx.len() {
                        break;
                    }
                }
            }
        }
    }

    #[test]
    fn gaussian_search_beats_rounding() {
        let h = [Complex64::new(1.6, 1.4), Complex64::new(-0.3, 2.2)];
        let ring = CoefficientRing::gaussian();
        let best = best_coefficients(&h, 30.0, ring, 1e9).unwrap();
        let rounded: Vec<Complex64> = h.iter().map(|&z| ring.embed(ring.round(z))).collect();
        assert!(best.rate + 1e-12 >= computation_rate(&h, &rounded, 30.0).unwrap());
        let int_best = best_coefficients(&h, 30.0, CoefficientRing::Integer, 1e9).unwrap();
        assert!(best.rate + 1e-12 >= int_best.rate);
    }

    #[test]
    fn norm_cap_truncates() {
        let h = [c(3.0), c(6.0)];
        let out = best_coefficients(&h, 100.0, CoefficientRing::Integer, 2.0).unwrap();
        assert!(out.truncated);
        assert!(out.a.iter().map(|x| x.a * x.a).sum::<i64>() <= 2);
    }

    #[test]
    fn units_of_small_rings() {
        assert_eq!(CoefficientRing::gaussian().units().len(), 4);
        let eis = CoefficientRing::Quadratic(QuadraticRing::new(-3).unwrap());
        assert_eq!(eis.units().len(), 6);
        let r5 = CoefficientRing::Quadratic(QuadraticRing::new(-5).unwrap());
        assert_eq!(r5.units().len(), 2);
    }
}
