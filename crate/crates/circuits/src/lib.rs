//! QFT and single-step QAOA circuits in the swap-network (SGM) and parity
//! (PM) encodings, compiled to atom or transmon gate sets, with gate counts
//! and error-time-weighted run times.
//!
//! The QAOA swap-network router is a deterministic greedy heuristic, so its
//! gate counts show the expected scaling but are not optimal.

pub mod builders;
pub mod circuit;
pub mod error;
pub mod gate;
pub mod profile;
pub mod simulate;

pub use builders::{
    build_qaoa_pm_step, build_qaoa_sgm_step, build_qft_pm, build_qft_sgm, PmQftOptions, SpinGlassInstance,
};
pub use circuit::{Algorithm, Circuit, Encoding, GateCounts};
pub use error::{CircuitError, Result};
pub use profile::{GateSet, Platform, PlatformProfile, Variant};
