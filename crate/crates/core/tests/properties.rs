//! Property tests for the algebraic laws and protocol invariants.

use latcf::algebra::{factor_rational_prime, Alphabet, CrtMap, QuadInt, QuadraticRing};
use latcf::cfsim::{
    best_coefficients, computation_rate, effective_noise_variance, mmse_alpha, CfSystem,
    CoefficientRing, SourceState,
};
use latcf::codes::{lift_chain_to_ring_code, LinearCode, NestedCodeChain};
use latcf::lattices::{
    construction_a, construction_d, construction_pi_a, construction_pi_d, LatticePair,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn field(p: u64) -> Alphabet {
    Alphabet::integers_mod(p, 1).unwrap()
}

fn moduli_strategy() -> impl Strategy<Value = Vec<u64>> {
    prop::sample::subsequence(vec![4u64, 3, 5, 7, 11, 13, 27, 8, 25], 1..=3).prop_filter(
        "distinct primes",
        |m| {
            let primes: Vec<u64> = m
                .iter()
                .map(|&x| {
                    [2, 3, 5, 7, 11, 13]
                        .into_iter()
                        .find(|p| x % p == 0)
                        .unwrap()
                })
                .collect();
            let mut dedup = primes.clone();
            dedup.sort();
            dedup.dedup();
            dedup.len() == primes.len()
        },
    )
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| Complex64::new(a, b))
}

/// π_A over F_2 x F_3 with codes picked by index, N = 2.
fn pi_a_6(c2: usize, c3: usize) -> latcf::lattices::LatticeDescriptor {
    let codes2 = [
        LinearCode::zero(field(2), 2),
        LinearCode::repetition(field(2), 2),
        LinearCode::full(field(2), 2),
    ];
    let codes3 = [
        LinearCode::zero(field(3), 2),
        LinearCode::repetition(field(3), 2),
        LinearCode::full(field(3), 2),
    ];
    construction_pi_a(vec![codes2[c2].clone(), codes3[c3].clone()]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn crt_decomposition_roundtrip(moduli in moduli_strategy(), a in -1_000_000_000i64..=1_000_000_000) {
        let map = CrtMap::new(&moduli).unwrap();
        let (coords, rest) = map.decompose(a);
        let back = map.forward(&coords).unwrap() as i64 + map.modulus() as i64 * rest;
        prop_assert_eq!(back, a);
        prop_assert_eq!(map.sigma(a), coords);
    }

    #[test]
    fn crt_forward_is_a_ring_map(moduli in moduli_strategy(), x in 0u64..1_000_000, y in 0u64..1_000_000) {
        let map = CrtMap::new(&moduli).unwrap();
        let q = map.modulus();
        let sx = map.sigma(x as i64);
        let sy = map.sigma(y as i64);
        let sum: Vec<u64> = sx.iter().zip(&sy).zip(map.moduli()).map(|((a, b), m)| (a + b) % m).collect();
        let prod: Vec<u64> = sx.iter().zip(&sy).zip(map.moduli()).map(|((a, b), m)| (a * b) % m).collect();
        prop_assert_eq!(map.forward(&sum).unwrap(), (x + y) % q);
        prop_assert_eq!(map.forward(&prod).unwrap(), (x * y) % q);
    }

    #[test]
    fn code_encoding_is_linear(
        p in prop::sample::select(vec![2u64, 3, 5, 7]),
        seed in any::<u64>(),
        w1 in prop::collection::vec(0u64..7, 2),
        w2 in prop::collection::vec(0u64..7, 2),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let code = loop {
            use rand::Rng;
            let rows: Vec<Vec<u64>> = (0..2).map(|_| (0..4).map(|_| rng.gen_range(0..p)).collect()).collect();
            if let Ok(c) = LinearCode::new(field(p), 4, rows) {
                break c;
            }
        };
        let w1: Vec<u64> = w1.iter().map(|x| x % p).collect();
        let w2: Vec<u64> = w2.iter().map(|x| x % p).collect();
        let sum: Vec<u64> = w1.iter().zip(&w2).map(|(a, b)| (a + b) % p).collect();
        let c1 = code.encode(&w1).unwrap();
        let c2 = code.encode(&w2).unwrap();
        let c12: Vec<u64> = c1.iter().zip(&c2).map(|(a, b)| (a + b) % p).collect();
        prop_assert_eq!(code.encode(&sum).unwrap(), c12.clone());
        prop_assert!(code.contains(&c12).unwrap());
        prop_assert_eq!(code.solve(&c1).unwrap(), Some(w1));
    }

    #[test]
    fn lattice_is_a_group(c2 in 0usize..3, c3 in 0usize..3, i in 0usize..64, j in 0usize..64, k in -3i64..3, l in -3i64..3) {
        let lat = pi_a_6(c2, c3);
        let reps = lat.coset_representatives().unwrap();
        let x: Vec<i64> = reps[i % reps.len()].iter().map(|v| v + 6 * k).collect();
        let y: Vec<i64> = reps[j % reps.len()].iter().map(|v| v - 6 * l).collect();
        let sum: Vec<i64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let diff: Vec<i64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let neg: Vec<i64> = x.iter().map(|a| -a).collect();
        prop_assert!(lat.contains(&x).unwrap() && lat.contains(&y).unwrap());
        prop_assert!(lat.contains(&sum).unwrap());
        prop_assert!(lat.contains(&diff).unwrap());
        prop_assert!(lat.contains(&neg).unwrap());
        prop_assert!(lat.contains(&[6, 0]).unwrap() && lat.contains(&[0, 6]).unwrap());
    }

    #[test]
    fn quantize_is_nearest(c2 in 0usize..3, c3 in 0usize..3, y in prop::collection::vec(-8.0f64..8.0, 2)) {
        let lat = pi_a_6(c2, c3);
        let got = lat.quantize(&y).unwrap();
        prop_assert!(lat.contains(&got).unwrap());
        let dist = |p: &[i64]| p.iter().zip(&y).map(|(&a, &b)| (a as f64 - b).powi(2)).sum::<f64>();
        let best = lat
            .enumerate_box(&[(-16, 16), (-16, 16)])
            .unwrap()
            .iter()
            .map(|p| dist(p))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(dist(&got) <= best + 1e-9);
        let pair = LatticePair::new(lat.clone()).unwrap();
        prop_assert_eq!(pair.quantize(&y).unwrap(), got);
    }

    #[test]
    fn multistage_decoder_lands_on_the_lattice(c2 in 0usize..3, c3 in 0usize..3, y in prop::collection::vec(-8.0f64..8.0, 2)) {
        let lat = pi_a_6(c2, c3);
        let pair = LatticePair::new(lat.clone()).unwrap();
        let got = pair.quantize_multistage(&y).unwrap();
        prop_assert!(lat.contains(&got).unwrap());
        // exact near lattice points
        let near: Vec<f64> = pair.quantize(&y).unwrap().iter().map(|&v| v as f64 + 0.05).collect();
        prop_assert_eq!(pair.quantize_multistage(&near).unwrap(), pair.quantize(&near).unwrap());
    }

    #[test]
    fn mod_coarse_is_a_projection(v in prop::collection::vec(-100.0f64..100.0, 2)) {
        let pair = LatticePair::new(pi_a_6(1, 2)).unwrap();
        let r = pair.mod_coarse(&v).unwrap();
        prop_assert!(r.iter().all(|&x| (0.0..6.0).contains(&x)));
        prop_assert_eq!(pair.mod_coarse(&r).unwrap(), r.clone());
        for (a, b) in v.iter().zip(&r) {
            let k = (a - b) / 6.0;
            prop_assert!((k - k.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn construction_d_equals_lifted_code(
        p in prop::sample::select(vec![2u64, 3]),
        seed in any::<u64>(),
        k1 in 0usize..=2,
        extra in 0usize..=2,
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = loop {
            let b: Vec<Vec<u64>> = (0..2).map(|_| (0..2).map(|_| rng.gen_range(0..p)).collect()).collect();
            if NestedCodeChain::new(p, b.clone(), vec![2]).is_ok() {
                break b;
            }
        };
        let k2 = (k1 + extra).min(2);
        let chain = NestedCodeChain::new(p, basis, vec![k1, k2]).unwrap();
        let lifted = lift_chain_to_ring_code(&chain, 2).unwrap();
        let d = construction_d(chain, 2).unwrap();
        let pd = construction_pi_d(p * p, vec![lifted]).unwrap();
        let q = (p * p) as i64;
        let bounds = [(-q, q), (-q, q)];
        prop_assert_eq!(d.enumerate_box(&bounds).unwrap(), pd.enumerate_box(&bounds).unwrap());
    }

    #[test]
    fn mmse_never_worse_than_unit(h in prop::collection::vec(complex(), 1..4), seed in any::<u64>(), power in 0.1f64..100.0) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<Complex64> = h.iter().map(|_| Complex64::new(rng.gen_range(-3..=3) as f64, 0.0)).collect();
        let alpha = mmse_alpha(&h, &a, power);
        let at_mmse = effective_noise_variance(&h, &a, alpha, power);
        let at_one = effective_noise_variance(&h, &a, Complex64::new(1.0, 0.0), power);
        prop_assert!(at_mmse <= at_one + 1e-9);
    }

    #[test]
    fn search_certificate(h in prop::collection::vec(complex(), 1..4), power in 0.1f64..50.0) {
        prop_assume!(h.iter().any(|z| z.norm() > 1e-3));
        let found = best_coefficients(&h, power, CoefficientRing::Integer, 1e9).unwrap();
        prop_assert!(!found.truncated);
        // every nonzero a in the search box is no better
        let bound = 1.0 + power * h.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let r = bound.sqrt().floor() as i64;
        let k = h.len();
        let mut idx = vec![-r; k];
        loop {
            let a: Vec<Complex64> = idx.iter().map(|&x| Complex64::new(x as f64, 0.0)).collect();
            let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            if norm > 0.0 && norm < bound {
                prop_assert!(found.rate + 1e-9 >= computation_rate(&h, &a, power).unwrap());
            }
            let mut i = 0;
            while i < k {
                idx[i] += 1;
                if idx[i] <= r { break; }
                idx[i] = -r;
                i += 1;
            }
            if i == k { break; }
        }
        let rounded: Vec<Complex64> = h.iter().map(|z| Complex64::new(z.re.round(), 0.0)).collect();
        if rounded.iter().any(|z| z.re != 0.0) {
            prop_assert!(found.rate + 1e-9 >= computation_rate(&h, &rounded, power).unwrap());
        }
    }

    #[test]
    fn ideal_basis_has_index_norm(d in prop::sample::select(vec![-1i64, -2, -3, -5, -7, -11, -15, -19, -23]), pi in 0usize..10) {
        let p = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29][pi];
        let ring = QuadraticRing::new(d).unwrap();
        for ideal in factor_rational_prime(&ring, p).unwrap().ideals {
            let [b1, b2] = ideal.z_basis();
            prop_assert!(ideal.contains(b1) && ideal.contains(b2));
            let det = (b1.a as i128 * b2.b as i128 - b1.b as i128 * b2.a as i128).unsigned_abs();
            prop_assert_eq!(det as u64, ideal.norm());
            // products with ring elements stay inside
            for x in [QuadInt::new(1, 1), QuadInt::new(-2, 3)] {
                prop_assert!(ideal.contains(ring.mul(x, b2)));
            }
        }
    }
}

fn sources(sys: &CfSystem, k: usize, rng: &mut ChaCha8Rng) -> Vec<SourceState> {
    (0..k).map(|_| sys.make_source(rng).unwrap()).collect()
}

#[test]
fn dither_cancellation_recovers_the_combination() {
    use rand::Rng;
    let sys = CfSystem::new(pi_a_6(1, 2), CoefficientRing::Integer).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = rng.gen_range(1..=3);
        let src = sources(&sys, k, &mut rng);
        let a: Vec<QuadInt> = (0..k)
            .map(|_| QuadInt::integer(rng.gen_range(-4..=4)))
            .collect();
        let h: Vec<Complex64> = a.iter().map(|x| Complex64::new(x.a as f64, 0.0)).collect();
        let power = rng.gen_range(0.5..50.0);
        let y = sys.channel(&h, &src, power, None).unwrap();
        let dithers: Vec<Vec<Complex64>> = src.iter().map(|s| s.dither.clone()).collect();
        let out = sys
            .relay_process(&y, &a, &dithers, &h, power, Complex64::new(1.0, 0.0))
            .unwrap();
        for j in 0..2 {
            let re: i64 = a
                .iter()
                .zip(&src)
                .map(|(ak, s)| ak.a * s.point[j].a)
                .sum::<i64>()
                .rem_euclid(6);
            let im: i64 = a
                .iter()
                .zip(&src)
                .map(|(ak, s)| ak.a * s.point[j].b)
                .sum::<i64>()
                .rem_euclid(6);
            // distance on the torus R^2 / 6Z^2
            let dr = (out.y_prime[j].re - re as f64).rem_euclid(6.0);
            let di = (out.y_prime[j].im - im as f64).rem_euclid(6.0);
            worst = worst.max(dr.min(6.0 - dr)).max(di.min(6.0 - di));
        }
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn decoded_function_ignores_coarse_shifts() {
    use rand::Rng;
    let sys = CfSystem::new(pi_a_6(1, 2), CoefficientRing::Integer).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let mut src = sources(&sys, 2, &mut rng);
        let a = [
            QuadInt::integer(rng.gen_range(-3..=3)),
            QuadInt::integer(rng.gen_range(1..=3)),
        ];
        let (before, _) = sys.multistage_roundtrip(&src, &a, 4.0, false).unwrap();
        let j = rng.gen_range(0..2);
        let t = src[0].point[j];
        src[0].point[j] = QuadInt::new(
            t.a + 6 * rng.gen_range(-3..=3),
            t.b + 6 * rng.gen_range(-3..=3),
        );
        assert!(sys.contains(&src[0].point).unwrap());
        let (after, _) = sys.multistage_roundtrip(&src, &a, 4.0, false).unwrap();
        assert_eq!(before.codewords, after.codewords);
    }
}

#[test]
fn construction_a_over_fp_equals_single_level_pi_d() {
    let code = LinearCode::from_row_major(field(5), 3, 1, &[1, 2, 4]).unwrap();
    let a = construction_a(code.clone()).unwrap();
    let d = construction_pi_d(5, vec![code]).unwrap();
    let b = [(-5, 4); 3];
    assert_eq!(a.enumerate_box(&b).unwrap(), d.enumerate_box(&b).unwrap());
}

#[test]
fn crt_roundtrip_on_ten_thousand_values() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    let maps: Vec<CrtMap> = [vec![2, 3], vec![4, 9, 5], vec![7, 11, 13], vec![27, 8]]
        .iter()
        .map(|m| CrtMap::new(m).unwrap())
        .collect();
    for i in 0..10_000 {
        let map = &maps[i % maps.len()];
        let a: i64 = rng.gen_range(-1_000_000_000..=1_000_000_000);
        let (coords, rest) = map.decompose(a);
        assert_eq!(
            map.forward(&coords).unwrap() as i64 + map.modulus() as i64 * rest,
            a
        );
    }
}
