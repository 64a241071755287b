//! Compute-and-forward over nested lattice pairs: `K` sources send dithered
//! lattice codewords, each of `M` relays scales its observation, removes the
//! dithers and decodes an integer combination of the codewords back to a
//! function of the messages.

pub mod protocol;
pub mod rate;
pub mod trials;

use thiserror::Error;

use crate::codes::CodeError;
use crate::lattices::LatticeError;

pub use protocol::{complex_normal, CfSystem, Decoded, RelayOutput, SourceState};
pub use rate::{
    best_coefficients, computation_rate, effective_noise_variance, mmse_alpha, CoefficientRing,
    SearchOutcome,
};
pub use trials::{
    coefficient_ring, records_to_csv, run_trials, AlphaMode, RingChoice, SimulationConfig,
    TrialRecord, CSV_HEADER,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CfError {
    #[error("coefficient vector must be nonzero")]
    ZeroCoefficients,
    #[error("power must be positive and finite, got {0}")]
    NonPositivePower(f64),
    #[error("channel vector must be nonzero")]
    ZeroChannel,
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coefficient ring does not act on this lattice")]
    RingMismatch,
    #[error("codeword is not a point of the fine lattice")]
    NotInLattice,
    #[error("messages do not match the stream and level layout")]
    MessageShape,
    #[error("at least one trial is required")]
    ZeroTrials,
    #[error("channel matrix must be M x K with finite entries and K, M >= 1")]
    ChannelShape,
    #[error("coefficient search found no candidate")]
    SearchEmpty,
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Code(#[from] CodeError),
}
