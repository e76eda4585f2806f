//! Finite-key security analysis for BB84-type QKD protocols with imperfect
//! sources and mismatched detectors.
//!
//! The crate is organised around a pluggable phase-error-rate bound: any
//! bound valid under basis-independent detection efficiency can be lifted to
//! a bound valid under a detection-efficiency mismatch parameterised by
//! `(delta1, delta2)`. On top of that sit the detector tolerance model, the
//! decoy-state variants, the key-length formulas, a simple fibre channel
//! model for rate sweeps, and a Monte-Carlo harness that validates the
//! classical sampling steps the security argument relies on.

pub mod bounds;
pub mod channel;
pub mod concentration;
pub mod decoy;
pub mod detector;
pub mod extension;
pub mod key_length;
pub mod mc;
pub mod testkit;

/// Errors shared by all modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input is outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A caller violated an operation contract (e.g. required monotonicity
    /// flags are not set).
    #[error("contract violation: {0}")]
    Contract(String),
    /// An exact enumeration would exceed the configured budget and no
    /// monotonicity flag allows a closed form. Never silently approximated.
    #[error("enumeration infeasible: {0}")]
    EnumerationInfeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
