//! Repo-wide numerical tolerances. Tests and runtime checks read these
//! constants rather than spelling out literals.

/// ‖m − m†‖_max allowed before a matrix is rejected as non-Hermitian.
pub const HERMITIAN: f64 = 1e-10;

/// Relative reconstruction residual of an eigendecomposition,
/// scaled by `1 + ‖m‖_max`.
pub const EIG_RECONSTRUCTION: f64 = 1e-9;

/// Deviation of U†U from the identity accepted for a unitary.
pub const UNITARY: f64 = 1e-9;

/// Norm drift allowed after applying a unitary to a state.
pub const NORM: f64 = 1e-10;

/// Orthonormality of eigenvector columns.
pub const ORTHONORMAL: f64 = 1e-10;

/// Both cosine and sine components below this make the phase unidentifiable.
pub const DEGENERATE_COMPONENTS: f64 = 1e-12;

/// Orthogonality of a leakage vector to the target subspace.
pub const LEAK_ORTHOGONAL: f64 = 1e-10;

/// Overdetermined residual of the pairwise-difference linear system.
pub const RECONSTRUCTION_RESIDUAL: f64 = 1e-8;

/// Companion-matrix eigenvalues with |imag| below this (relative to
/// `1 + |re|`) are treated as real candidates.
pub const ROOT_IMAG: f64 = 1e-6;

/// A candidate root is accepted when the trigonometric polynomial it came
/// from vanishes to this (relative) level.
pub const ROOT_RESIDUAL: f64 = 1e-8;

/// Amplitude values at or below this are printed as zero in circuit text and
/// treated as absent gates by [`crate::circuits::Circuit::simplified`].
pub const GATE_IDENTITY: f64 = 1e-12;

/// Largest register the dense routines accept.
pub const MAX_QUBITS: usize = 12;
