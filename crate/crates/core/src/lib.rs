//! Optimal-control toolkit for quantum speed limit studies of multi-qubit
//! gates on Rydberg atoms and superconducting transmons.

pub mod dynamics;
pub mod error;
pub mod fields;
pub mod gates;
pub mod models;
pub mod optimizer;
pub mod qslscan;

pub use error::{QslError, Result};

/// Complex amplitude type used throughout.
pub type C64 = num_complex::Complex64;
