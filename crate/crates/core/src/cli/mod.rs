//! Command-line front end. [`run`] executes a parsed command against an
//! output stream and returns the process exit code.
//!
//! Exit codes: 0 success (or `member` verdict "in"), 1 `member` verdict "out",
//! 2 usage or schema error, 3 construction error, 4 I/O or runtime failure.

pub mod literal;
pub mod schema;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::algebra::QuadraticRing;
use crate::cfsim::trials::DEFAULT_NORM_CAP;
use crate::cfsim::{
    best_coefficients, coefficient_ring, computation_rate, records_to_csv, run_trials, CfError,
    CfSystem, CoefficientRing,
};
use crate::lattices::Ambient;
use literal::{parse_complex_list, parse_int_list, parse_ring_list};
use schema::{descriptor_json, parse_config, parse_construction};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid document: {0}")]
    Schema(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Schema(_) => 2,
            CliError::Construction(_) => 3,
            CliError::Runtime(_) | CliError::Io(_) => 4,
        }
    }
}

impl From<CfError> for CliError {
    fn from(e: CfError) -> Self {
        match e {
            CfError::ZeroTrials
            | CfError::ChannelShape
            | CfError::NonPositivePower(_)
            | CfError::ZeroCoefficients
            | CfError::ZeroChannel
            | CfError::DimensionMismatch { .. } => CliError::Schema(e.to_string()),
            CfError::RingMismatch | CfError::Lattice(_) | CfError::Code(_) => {
                CliError::Construction(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "latcf",
    version,
    about = "Lattices from linear codes and a compute-and-forward simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RingArg {
    Integer,
    Gaussian,
    /// The ring of integers of Q(√d), with d from `--d`.
    Quadratic,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a lattice from a config and write its JSON descriptor.
    Construct {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test a vector for membership; exits 0 when in, 1 when out.
    Member {
        /// Descriptor or config file.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        vector: String,
    },
    /// Print the computation rate R(h, a) in bits per channel use.
    Rate {
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        power: f64,
    },
    /// Search for the coefficient vector with the highest computation rate.
    Search {
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long, allow_hyphen_values = true)]
        power: f64,
        #[arg(long, value_enum, default_value_t = RingArg::Integer)]
        ring: RingArg,
        #[arg(long, allow_hyphen_values = true)]
        d: Option<i64>,
        /// Bound on the squared norm of candidate vectors.
        #[arg(long)]
        cap: Option<f64>,
        /// Config whose `search.max_norm_cap` sets the bound.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run Monte Carlo trials and write one CSV row per trial and relay.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u32>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn check_power(power: f64) -> Result<(), CliError> {
    if !power.is_finite() || power <= 0.0 {
        return Err(CliError::Usage(format!(
            "power must be positive, got {power}"
        )));
    }
    Ok(())
}

/// Executes `command`, writing results to `out`; returns the exit code.
pub fn run(command: &Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Construct { config, out: path } => {
            let doc = parse_config(&read(config)?)?;
            let lattice = doc.construction.build()?;
            emit(out, path.as_deref(), &descriptor_json(&lattice))?;
            Ok(0)
        }
        Command::Member { config, vector } => {
            let lattice = parse_construction(&read(config)?)?.build()?;
            let inside = match lattice.ambient() {
                Ambient::Real => lattice.contains(&parse_int_list(vector)?),
                Ambient::Complex => lattice.contains_ring(&parse_ring_list(vector)?),
            }
            .map_err(|e| CliError::Usage(e.to_string()))?;
            writeln!(out, "{}", if inside { "in" } else { "out" })?;
            Ok(if inside { 0 } else { 1 })
        }
        Command::Rate { h, a, power } => {
            check_power(*power)?;
            let h = parse_complex_list(h)?;
            let ring = CoefficientRing::gaussian();
            let a = ring.embed_all(&parse_ring_list(a)?);
            let rate = computation_rate(&h, &a, *power)?;
            writeln!(out, "{rate:.9}")?;
            Ok(0)
        }
        Command::Search {
            h,
            power,
            ring,
            d,
            cap,
            config,
        } => {
            check_power(*power)?;
            let h = parse_complex_list(h)?;
            let ring = match (ring, d) {
                (RingArg::Integer, None) => CoefficientRing::Integer,
                (RingArg::Gaussian, None) => CoefficientRing::gaussian(),
                (RingArg::Quadratic, Some(d)) => {
                    let r = QuadraticRing::new(*d).map_err(|e| CliError::Usage(e.to_string()))?;
                    if !r.is_imaginary() {
                        return Err(CliError::Usage(
                            "coefficient search needs an imaginary quadratic ring".into(),
                        ));
                    }
                    CoefficientRing::Quadratic(r)
                }
                (RingArg::Quadratic, None) => {
                    return Err(CliError::Usage("--ring quadratic needs --d".into()))
                }
                (_, Some(_)) => {
                    return Err(CliError::Usage(
                        "--d only applies to --ring quadratic".into(),
                    ))
                }
            };
            let cap = match (cap, config) {
                (Some(c), _) => *c,
                (None, Some(path)) => parse_config(&read(path)?)?
                    .search
                    .map_or(DEFAULT_NORM_CAP, |s| s.max_norm_cap),
                (None, None) => DEFAULT_NORM_CAP,
            };
            let found = best_coefficients(&h, *power, ring, cap)?;
            writeln!(
                out,
                "a={}",
                crate::cfsim::trials::format_coefficients(&found.a, ring)
            )?;
            writeln!(out, "rate={:.9}", found.rate)?;
            writeln!(out, "truncated={}", found.truncated)?;
            Ok(0)
        }
        Command::Simulate {
            config,
            out: path,
            seed,
            trials,
        } => {
            let doc = parse_config(&read(config)?)?;
            let sim = doc
                .simulation
                .clone()
                .ok_or_else(|| CliError::Schema("config has no `simulation` section".into()))?;
            let trials = trials.unwrap_or(sim.trials);
            let seed = seed.unwrap_or(sim.seed);
            if trials == 0 {
                return Err(CfError::ZeroTrials.into());
            }
            sim.validate()?;
            let lattice = doc.construction.build()?;
            let lattice_ring = lattice.residue_map().map(|r| *r.ring());
            let ring = coefficient_ring(sim.coefficient_ring, lattice_ring)?;
            let system = CfSystem::new(lattice, ring)?;
            let cap = doc
                .search
                .as_ref()
                .map_or(DEFAULT_NORM_CAP, |s| s.max_norm_cap);
            let records = run_trials(&system, &sim, trials, seed, cap)?;
            emit(out, path.as_deref(), &records_to_csv(&records, ring))?;
            Ok(0)
        }
    }
}
