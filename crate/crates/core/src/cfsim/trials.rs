//! Monte Carlo harness: independent trials, each seeded from `(seed, trial)`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::protocol::{complex_normal, CfSystem, SourceState};
use super::rate::{best_coefficients, computation_rate, mmse_alpha, CoefficientRing};
use super::CfError;
use crate::algebra::QuadInt;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "LATCF_THREADS";

pub const CSV_HEADER: &str =
    "trial,relay,a,rate_bits,alpha_re,alpha_im,noise_var_analytic,noise_var_emp,decode_ok,zero_divisor_flag";

pub const DEFAULT_NORM_CAP: f64 = 1024.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMode {
    /// MMSE scaling with the rate-maximizing coefficients.
    #[default]
    Mmse,
    /// `α = 1` and `a = round(h)`.
    Unit,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RingChoice {
    #[default]
    Integer,
    Gaussian,
    /// The ring of integers the lattice is built over.
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(rename = "K")]
    pub sources: usize,
    #[serde(rename = "M")]
    pub relays: usize,
    #[serde(rename = "P")]
    pub power: f64,
    pub trials: u32,
    pub seed: u64,
    /// `M` rows of `K` entries `[re, im]`.
    #[serde(rename = "fixed_H", default, skip_serializing_if = "Option::is_none")]
    pub fixed_h: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub alpha_mode: AlphaMode,
    #[serde(default)]
    pub multistage: bool,
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default)]
    pub coefficient_ring: RingChoice,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), CfError> {
        if self.trials == 0 {
            return Err(CfError::ZeroTrials);
        }
        if self.sources == 0 || self.relays == 0 {
            return Err(CfError::ChannelShape);
        }
        if !self.power.is_finite() || self.power <= 0.0 {
            return Err(CfError::NonPositivePower(self.power));
        }
        if let Some(h) = &self.fixed_h {
            if h.len() != self.relays || h.iter().any(|row| row.len() != self.sources) {
                return Err(CfError::ChannelShape);
            }
            if h.iter().flatten().flatten().any(|x| !x.is_finite()) {
                return Err(CfError::ChannelShape);
            }
        }
        Ok(())
    }

    pub fn channel_matrix(&self) -> Option<Vec<Vec<Complex64>>> {
        self.fixed_h.as_ref().map(|h| {
            h.iter()
                .map(|row| row.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
                .collect()
        })
    }
}

/// One CSV row: the outcome at one relay in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u32,
    pub relay: usize,
    pub a: Vec<QuadInt>,
    pub rate_bits: f64,
    pub alpha: Complex64,
    pub noise_var_analytic: f64,
    pub noise_var_emp: f64,
    pub decode_ok: bool,
    pub zero_divisor_flag: bool,
}

/// Resolves the configured ring against the lattice ring of `system`.
pub fn coefficient_ring(
    choice: RingChoice,
    lattice_ring: Option<crate::algebra::QuadraticRing>,
) -> Result<CoefficientRing, CfError> {
    match (choice, lattice_ring) {
        (RingChoice::Integer, _) => Ok(CoefficientRing::Integer),
        (RingChoice::Gaussian, None) => Ok(CoefficientRing::gaussian()),
        (RingChoice::Gaussian, Some(r)) if r.d() == -1 => Ok(CoefficientRing::Quadratic(r)),
        (RingChoice::Quadratic, Some(r)) => Ok(CoefficientRing::Quadratic(r)),
        _ => Err(CfError::RingMismatch),
    }
}

/// Runs `trials` trials. Trial `t` draws from ChaCha8 seeded with `seed` on
/// stream `t`, so the records do not depend on scheduling.
pub fn run_trials(
    system: &CfSystem,
    config: &SimulationConfig,
    trials: u32,
    seed: u64,
    max_norm_cap: f64,
) -> Result<Vec<TrialRecord>, CfError> {
    let config = SimulationConfig {
        trials,
        seed,
        ..config.clone()
    };
    config.validate()?;
    let fixed = config.channel_matrix();
    let run = || {
        (0..trials)
            .into_par_iter()
            .map(|t| run_one(system, &config, fixed.as_deref(), t, max_norm_cap))
            .collect::<Result<Vec<_>, _>>()
    };
    let per_trial = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CfError::ThreadPool(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    Ok(per_trial.into_iter().flatten().collect())
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
}

fn run_one(
    system: &CfSystem,
    config: &SimulationConfig,
    fixed: Option<&[Vec<Complex64>]>,
    trial: u32,
    cap: f64,
) -> Result<Vec<TrialRecord>, CfError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial as u64);
    let (k, m, power) = (config.sources, config.relays, config.power);
    let h: Vec<Vec<Complex64>> = match fixed {
        Some(h) => h.to_vec(),
        None => (0..m)
            .map(|_| (0..k).map(|_| complex_normal(&mut rng)).collect())
            .collect(),
    };
    let sources = (0..k)
        .map(|_| system.make_source(&mut rng))
        .collect::<Result<Vec<SourceState>, _>>()?;
    let dithers: Vec<Vec<Complex64>> = sources.iter().map(|s| s.dither.clone()).collect();
    let xs = sources
        .iter()
        .map(|s| system.transmit(s, power))
        .collect::<Result<Vec<_>, _>>()?;
    let messages: Vec<&[Vec<Vec<u64>>]> = sources.iter().map(|s| s.messages.as_slice()).collect();
    let ring = system.coefficients();
    let n = system.dimension();

    let mut records = Vec::with_capacity(m);
    for (relay, hm) in h.iter().enumerate() {
        let noise: Vec<Complex64> = if config.noiseless {
            vec![Complex64::new(0.0, 0.0); n]
        } else {
            (0..n).map(|_| complex_normal(&mut rng)).collect()
        };
        let (a, alpha) = match config.alpha_mode {
            AlphaMode::Mmse => {
                let a = best_coefficients(hm, power, ring, cap)?.a;
                let alpha = mmse_alpha(hm, &ring.embed_all(&a), power);
                (a, alpha)
            }
            AlphaMode::Unit => (
                hm.iter().map(|&z| ring.round(z)).collect(),
                Complex64::new(1.0, 0.0),
            ),
        };
        let emb = ring.embed_all(&a);
        let rate = computation_rate(hm, &emb, power).unwrap_or(0.0);
        let y: Vec<Complex64> = (0..n)
            .map(|j| {
                hm.iter()
                    .zip(&xs)
                    .map(|(&hk, x)| hk * x[j])
                    .sum::<Complex64>()
                    + noise[j]
            })
            .collect();
        let noise_var_emp = (0..n)
            .map(|j| {
                let combo: Complex64 = emb.iter().zip(&xs).map(|(&ak, x)| ak * x[j]).sum();
                (alpha * y[j] - combo).norm_sqr()
            })
            .sum::<f64>()
            / n as f64;
        let out = system.relay_process(&y, &a, &dithers, hm, power, alpha)?;
        let decoded = system.decode_function(&out.y_prime, config.multistage)?;
        let expected = system.expected_function(&a, &messages);
        records.push(TrialRecord {
            trial,
            relay,
            rate_bits: rate,
            alpha,
            noise_var_analytic: out.noise_var_analytic,
            noise_var_emp,
            decode_ok: system.decode_matches(&decoded, &expected)?,
            zero_divisor_flag: system.zero_divisor_flag(&a),
            a,
        });
    }
    Ok(records)
}

/// Coefficient vector as semicolon-separated entries: integers plainly, ring
/// elements `a+bξ` as `a+bxi` (or `a+bi` over `Z[i]`).
pub fn format_coefficients(a: &[QuadInt], ring: CoefficientRing) -> String {
    let fmt = |x: &QuadInt| match ring {
        CoefficientRing::Integer => x.a.to_string(),
        CoefficientRing::Quadratic(r) if r.d() == -1 => x.to_string(),
        CoefficientRing::Quadratic(_) => {
            if x.b < 0 {
                format!("{}-{}xi", x.a, -x.b)
            } else {
                format!("{}+{}xi", x.a, x.b)
            }
        }
    };
    a.iter().map(fmt).collect::<Vec<_>>().join(";")
}

/// Full CSV document (header plus one row per record).
pub fn records_to_csv(records: &[TrialRecord], ring: CoefficientRing) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{:.9},{:.9},{:.9},{:.9},{:.9},{},{}",
            r.trial,
            r.relay,
            format_coefficients(&r.a, ring),
            r.rate_bits,
            r.alpha.re,
            r.alpha.im,
            r.noise_var_analytic,
            r.noise_var_emp,
            u8::from(r.decode_ok),
            u8::from(r.zero_divisor_flag)
        )
        .expect("writing to a String cannot fail");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Alphabet;
    use crate::codes::LinearCode;
    use crate::lattices::construction_pi_a;

    fn system() -> CfSystem {
        let f = |p| Alphabet::integers_mod(p, 1).unwrap();
        let lat = construction_pi_a(vec![
            LinearCode::repetition(f(2), 2),
            LinearCode::full(f(3), 2),
        ])
        .unwrap();
        CfSystem::new(lat, CoefficientRing::Integer).unwrap()
    }

    fn config() -> SimulationConfig {
        SimulationConfig {
            sources: 2,
            relays: 2,
            power: 10.0,
            trials: 5,
            seed: 42,
            fixed_h: None,
            alpha_mode: AlphaMode::Mmse,
            multistage: false,
            noiseless: false,
            coefficient_ring: RingChoice::Integer,
        }
    }

    #[test]
    fn deterministic_and_shaped() {
        let sys = system();
        let a = run_trials(&sys, &config(), 20, 42, DEFAULT_NORM_CAP).unwrap();
        let b = run_trials(&sys, &config(), 20, 42, DEFAULT_NORM_CAP).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 40);
        let csv = records_to_csv(&a, CoefficientRing::Integer);
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), 41);
        let c = run_trials(&sys, &config(), 20, 43, DEFAULT_NORM_CAP).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_trials_rejected() {
        assert_eq!(
            run_trials(&system(), &config(), 0, 1, 10.0),
            Err(CfError::ZeroTrials)
        );
    }

    #[test]
    fn noiseless_integer_channel_always_decodes() {
        let cfg = SimulationConfig {
            fixed_h: Some(vec![
                vec![[1.0, 0.0], [2.0, 0.0]],
                vec![[-1.0, 0.0], [3.0, 0.0]],
            ]),
            alpha_mode: AlphaMode::Unit,
            noiseless: true,
            ..config()
        };
        let recs = run_trials(&system(), &cfg, 30, 7, DEFAULT_NORM_CAP).unwrap();
        assert!(recs.iter().all(|r| r.decode_ok));
        assert!(recs.iter().all(|r| r.noise_var_emp < 1e-18));
        assert_eq!(
            format_coefficients(&recs[0].a, CoefficientRing::Integer),
            "1;2"
        );
    }

    #[test]
    fn coefficient_formatting() {
        let a = [QuadInt::new(2, 1), QuadInt::new(0, -3)];
        assert_eq!(
            format_coefficients(&a, CoefficientRing::gaussian()),
            "2+1i;0-3i"
        );
        let r = crate::algebra::QuadraticRing::new(-15).unwrap();
        assert_eq!(
            format_coefficients(&a, CoefficientRing::Quadratic(r)),
            "2+1xi;0-3xi"
        );
    }
}
