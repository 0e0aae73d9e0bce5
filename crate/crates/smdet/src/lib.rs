//! Link-level simulator and detector library for spatial-modulation (SM) MIMO
//! systems operating with imperfect, time-varying channel knowledge.
//!
//! The crate is organized around the life of one simulated frame window:
//!
//! * [`corrmodel`] synthesizes space-time correlated block-fading channels
//!   (Kronecker spatial correlation, Jakes temporal correlation) and AWGN.
//! * [`smcodec`] maps information bits to SM blocks (active-antenna index plus
//!   modulated symbol), builds constellations and pilot blocks, and enumerates
//!   detection candidate sets.
//! * [`chest`] provides the two pilot-assisted channel estimators: a
//!   quadratic-polynomial interpolator over three pilot blocks and a
//!   decision-directed least-squares tracker, plus a blind spatial-correlation
//!   estimator.
//! * [`detectors`] implements the estimation-error-aware ML detector family:
//!   full-search ML for PSK/QAM/general signals, two-stage variants, and the
//!   reduced detectors that assume uncorrelated receive (ZRC) or transmit
//!   (ZTC) antennas, all backed by a precomputed statistics cache.
//! * [`analysis`] computes pairwise error probabilities via numerical
//!   inversion of noncentral Gaussian quadratic-form CDFs and union bounds on
//!   BER.
//! * [`harness`] runs Monte Carlo BER sweeps over scenarios, with
//!   reproducible seeded substreams and CSV output.

pub mod analysis;
pub mod bessel;
pub mod chest;
pub mod config;
pub mod corrmodel;
pub mod detectors;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod smcodec;

pub use config::{ModKind, SystemConfig};
pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
