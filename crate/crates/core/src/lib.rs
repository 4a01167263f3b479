//! Robust phase estimation (RPE) of Hamiltonian eigenvalue differences without
//! auxiliary qubits.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: dense complex linear algebra (Hermitian eigendecomposition,
//!   unitary exponentials, state application).
//! * [`hamiltonians`]: Pauli-term Hamiltonians, their text format and dense form.
//! * [`circuits`]: gate lists, eigenstate-superposition preparation and a
//!   statevector simulator.
//! * [`rpe`]: the multi-generation estimator and energy reconstruction.
//! * [`spam`]: the coherent state-preparation-and-measurement error model.
//! * [`robustness`]: worst-case bounds on the phase error and success-region maps.
//!
//! Data-parallel sweeps go through [`exec::Execution`], which uses rayon when
//! the `parallel` feature is enabled and falls back to plain iteration otherwise.

pub mod circuits;
pub mod exec;
pub mod hamiltonians;
pub mod numerics;
pub mod robustness;
pub mod rpe;
pub mod spam;
pub mod tolerances;
mod trigpoly;

pub use num_complex::Complex64;
