//! Design and simulation toolkit for a joint radar and communication (JRC)
//! system with semi-passive backscattering targets.
//!
//! The crate covers the full chain at desk scale:
//!
//! * [`waveform`] — transmit pulse envelopes, FMCW carriers, derivative
//!   autocorrelation.
//! * [`array`] — antenna geometries, steering vectors, eigen-beamformers.
//! * [`scenario`] — radar/channel/target description and echo synthesis.
//! * [`bounds`] — target ambiguity functions, Fisher information, CRBs.
//! * [`optimizer`] — calculus-of-variations envelope optimization.
//! * [`codebook`] — Gaussian spherical codes with ML decoding and BER harness.
//! * [`linkbudget`] — SINR, inter-target suppression, and rate bounds.
//! * [`simulator`] — beamform/compress/detect/demodulate receiver pipeline.

pub mod array;
pub mod bounds;
pub mod codebook;
pub mod linkbudget;
pub mod optimizer;
pub mod scenario;
pub mod simulator;
pub mod waveform;

mod rng;

pub use rng::derive_seed;

use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Errors shared by all modules of the toolkit.
#[derive(Debug, Error)]
pub enum JrcError {
    /// A caller-supplied value violates an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// An internal consistency check failed (numerical breakdown).
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, JrcError>;

impl JrcError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        JrcError::InvalidArgument(msg.into())
    }
}
