//! Simulator and optimizer for the three-qubit self-contained absorption
//! refrigerator: exact stationary states of the reset master equation,
//! nonlinear entanglement witnesses, and constrained cooling searches that
//! measure how much entanglement helps.
//!
//! The numerical core is generic over [`scalar::Real`]; the aliases at the
//! crate root fix the scalar to `f64`, which is what the solver needs.

// `!(x < tol)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entanglement;
pub mod error;
pub mod io;
pub mod model;
pub mod optimize;
pub mod scalar;
pub mod state;

pub use error::{FridgeError, Result};
pub use scalar::{Real, Tolerances};

/// Complex 64-bit matrix.
pub type ComplexMatrix = scalar::ComplexMatrix<f64>;
/// Validated three-qubit density matrix.
pub type DensityMatrix = state::DensityMatrix<f64>;
/// Refrigerator configuration.
pub type FridgeParams = model::FridgeParams<f64>;
/// Master-equation generator.
pub type Liouvillian = model::Liouvillian<f64>;
/// Solved stationary state and observables.
pub type SteadyState = model::SteadyState<f64>;
/// Heat currents `(QC, QR, QH)`.
pub type HeatCurrents = model::HeatCurrents<f64>;
/// Witness values and concurrences of one state.
pub type EntanglementReport = entanglement::EntanglementReport<f64>;
/// Purity-ball and biseparability certificate.
pub type SeparabilityCertificate = entanglement::SeparabilityCertificate<f64>;
