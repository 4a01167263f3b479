//! Dense complex linear algebra for registers of up to [`MAX_QUBITS`] qubits.
//!
//! Everything here is value-semantic: matrices and states are owned, cheap to
//! clone at the sizes we care about, and free of interior mutability, so the
//! functions are safe to call from any number of threads.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::tolerances::{self, MAX_QUBITS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not Hermitian: max |m - m†| = {defect:.3e}")]
    NotHermitian { defect: f64 },
    #[error("eigendecomposition did not converge (reconstruction residual {residual:.3e})")]
    NoConvergence { residual: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix of dimension {0} exceeds the dense limit of 2^{MAX_QUBITS}")]
    TooLarge(usize),
}

/// Square complex matrix with row-major semantic order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        ComplexMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        ComplexMatrix(DMatrix::from_fn(dim, dim, f))
    }

    /// Builds a matrix from `dim * dim` entries given row by row.
    pub fn from_row_major(dim: usize, entries: &[Complex64]) -> Result<Self, NumericsError> {
        if entries.len() != dim * dim {
            return Err(NumericsError::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(NumericsError::NonFinite);
        }
        Ok(ComplexMatrix(DMatrix::from_row_slice(dim, dim, entries)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |r, c| {
            if r == c {
                Complex64::new(diag[r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.0[(row, col)] = value;
    }

    /// Entries in row-major order.
    pub fn row_major(&self) -> Vec<Complex64> {
        let n = self.dim();
        (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| self.0[(r, c)])
            .collect()
    }

    pub fn column(&self, col: usize) -> StateVector {
        StateVector(self.0.column(col).into_owned())
    }

    pub fn adjoint(&self) -> Self {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Self {
        ComplexMatrix(&self.0 * &other.0)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        ComplexMatrix(&self.0 * factor)
    }

    pub fn add(&self, other: &ComplexMatrix) -> Self {
        ComplexMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Self {
        ComplexMatrix(&self.0 - &other.0)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |m − m†| over entries.
    pub fn hermitian_defect(&self) -> f64 {
        self.sub(&self.adjoint()).max_abs()
    }

    /// max |U†U − I| over entries.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        self.adjoint()
            .matmul(self)
            .sub(&ComplexMatrix::identity(n))
            .max_abs()
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() < tolerances::UNITARY
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &ComplexMatrix) -> Self {
        ComplexMatrix(self.0.kronecker(&other.0))
    }

    pub(crate) fn inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }
}

/// Pure state of a `2^n`-dimensional register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<Complex64>);

impl StateVector {
    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        StateVector(v)
    }

    pub fn zero_state(n_qubits: usize) -> Self {
        Self::basis(1 << n_qubits, 0)
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Self {
        StateVector(DVector::from_vec(amplitudes))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.0.as_slice()
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        self.0.as_mut_slice()
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.0[index]
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.0[index].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn normalized(&self) -> Self {
        StateVector(self.0.normalize())
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.0.dotc(&other.0)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        StateVector(&self.0 * factor)
    }

    pub fn add(&self, other: &StateVector) -> Self {
        StateVector(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &StateVector) -> Self {
        StateVector(&self.0 - &other.0)
    }

    /// Largest amplitude difference, ignoring nothing (no phase alignment).
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.sub(other)
            .0
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest amplitude difference after removing the global phase that
    /// best aligns `self` with `other`.
    pub fn distance_up_to_phase(&self, other: &StateVector) -> f64 {
        let overlap = self.inner(other);
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        self.scale(phase).max_abs_diff(other)
    }
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector for `eigenvalues[i]`.
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> StateVector {
        self.eigenvectors.column(i)
    }

    /// `exp(−i·scale·H)` rebuilt from the stored decomposition.
    pub fn exp_unitary(&self, scale: f64) -> ComplexMatrix {
        let n = self.dim();
        let v = self.eigenvectors.inner();
        let mut scaled = v.clone();
        for (c, &e) in self.eigenvalues.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -scale * e);
            for r in 0..n {
                scaled[(r, c)] *= phase;
            }
        }
        ComplexMatrix(scaled * v.adjoint())
    }

    /// max |V·diag(E)·V† − m| over entries.
    pub fn reconstruction_residual(&self, m: &ComplexMatrix) -> f64 {
        let v = self.eigenvectors.inner();
        let mut scaled = v.clone();
        for (c, &e) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(c).scale_mut(e);
        }
        ComplexMatrix(scaled * v.adjoint()).sub(m).max_abs()
    }

    /// max |V†V − I| over entries.
    pub fn orthonormality_defect(&self) -> f64 {
        self.eigenvectors.unitarity_defect()
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<Spectrum, NumericsError> {
    let n = m.dim();
    if n > 1 << MAX_QUBITS {
        return Err(NumericsError::TooLarge(n));
    }
    if m.inner()
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(NumericsError::NonFinite);
    }
    let defect = m.hermitian_defect();
    if defect > tolerances::HERMITIAN {
        return Err(NumericsError::NotHermitian { defect });
    }
    // Symmetrise so round-off in the input does not leak into the solver.
    let sym = m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0));

    let eig = SymmetricEigen::try_new(sym.0.clone(), f64::EPSILON, 0).ok_or(
        NumericsError::NoConvergence {
            residual: f64::INFINITY,
        },
    )?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |r, c| eig.eigenvectors[(r, order[c])]);

    let spectrum = Spectrum {
        eigenvalues,
        eigenvectors,
    };
    let residual = spectrum.reconstruction_residual(m);
    if residual > tolerances::EIG_RECONSTRUCTION * (1.0 + m.max_abs()) {
        return Err(NumericsError::NoConvergence { residual });
    }
    Ok(spectrum)
}

/// `exp(−i·scale·m)` for Hermitian `m`, via its eigendecomposition.
pub fn unitary_exp(m: &ComplexMatrix, scale: f64) -> Result<ComplexMatrix, NumericsError> {
    Ok(eig_hermitian(m)?.exp_unitary(scale))
}

/// `u·s`.
pub fn apply(u: &ComplexMatrix, s: &StateVector) -> Result<StateVector, NumericsError> {
    if u.dim() != s.dim() {
        return Err(NumericsError::DimensionMismatch {
            expected: u.dim(),
            found: s.dim(),
        });
    }
    Ok(StateVector(&u.0 * &s.0))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_row_major(2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap()
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    pub(crate) fn random_hermitian(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(dim, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        g.add(&g.adjoint()).scale(c(0.5, 0.0))
    }

    fn random_unitary(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
        unitary_exp(&random_hermitian(rng, dim), 1.0).unwrap()
    }

    #[test]
    fn identity_eigenvalues() {
        let s = eig_hermitian(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        for e in &s.eigenvalues {
            assert!((e - 1.0).abs() < 1e-14);
        }
        assert!(s.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn pauli_z_sorted_ascending() {
        let s = eig_hermitian(&pauli_z()).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pauli_x_eigenvectors_up_to_phase() {
        let x = pauli_x();
        let s = eig_hermitian(&x).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!(s.reconstruction_residual(&x) < 1e-12);
        let minus = StateVector::from_amplitudes(vec![c(FRAC_1_SQRT_2, 0.), c(-FRAC_1_SQRT_2, 0.)]);
        let plus = StateVector::from_amplitudes(vec![c(FRAC_1_SQRT_2, 0.), c(FRAC_1_SQRT_2, 0.)]);
        assert!(s.eigenvector(0).distance_up_to_phase(&minus) < 1e-12);
        assert!(s.eigenvector(1).distance_up_to_phase(&plus) < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_row_major(2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)])
            .unwrap();
        assert!(matches!(
            eig_hermitian(&m),
            Err(NumericsError::NotHermitian { .. })
        ));
    }

    #[test]
    fn exp_zero_scale_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_hermitian(&mut rng, 4);
        let u = unitary_exp(&h, 0.0).unwrap();
        assert!(u.sub(&ComplexMatrix::identity(4)).max_abs() < 1e-12);
    }

    #[test]
    fn exp_pauli_z_pi_is_minus_identity() {
        // exp(−iπZ) = diag(e^{−iπ}, e^{iπ})
        let u = unitary_exp(&pauli_z(), PI).unwrap();
        let expected = ComplexMatrix::from_fn(2, |r, c_| {
            if r == c_ {
                Complex64::from_polar(1.0, if r == 0 { -PI } else { PI })
            } else {
                c(0., 0.)
            }
        });
        assert!(u.sub(&expected).max_abs() < 1e-12);
        assert!(u.add(&ComplexMatrix::identity(2)).max_abs() < 1e-12);
    }

    #[test]
    fn exp_pauli_x_half_pi_matches_series() {
        // Power-series oracle: exp(−iθX) = Σ (−iθ)^k X^k / k!
        let x = pauli_x();
        let theta = FRAC_PI_2;
        let mut term = ComplexMatrix::identity(2);
        let mut sum = ComplexMatrix::identity(2);
        for k in 1..40 {
            term = term.matmul(&x).scale(c(0.0, -theta / k as f64));
            sum = sum.add(&term);
        }
        let u = unitary_exp(&x, theta).unwrap();
        assert!(u.sub(&sum).max_abs() < 1e-12);
        assert!(u.sub(&x.scale(c(0.0, -1.0))).max_abs() < 1e-12);
    }

    #[test]
    fn apply_basic_gates() {
        let zero = StateVector::basis(2, 0);
        assert_eq!(apply(&ComplexMatrix::identity(2), &zero).unwrap(), zero);
        let one = apply(&pauli_x(), &zero).unwrap();
        assert!(one.max_abs_diff(&StateVector::basis(2, 1)) < 1e-15);
        let h = ComplexMatrix::from_row_major(
            2,
            &[
                c(FRAC_1_SQRT_2, 0.),
                c(FRAC_1_SQRT_2, 0.),
                c(FRAC_1_SQRT_2, 0.),
                c(-FRAC_1_SQRT_2, 0.),
            ],
        )
        .unwrap();
        let plus = apply(&h, &zero).unwrap();
        assert!((plus.amplitude(0) - c(FRAC_1_SQRT_2, 0.)).norm() < 1e-15);
        assert!((plus.amplitude(1) - c(FRAC_1_SQRT_2, 0.)).norm() < 1e-15);
    }

    #[test]
    fn apply_dimension_mismatch() {
        let err = apply(&ComplexMatrix::identity(4), &StateVector::basis(2, 0)).unwrap_err();
        assert_eq!(
            err,
            NumericsError::DimensionMismatch {
                expected: 4,
                found: 2
            }
        );
    }

    #[test]
    fn random_hermitian_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [1, 2, 3, 8, 16, 64] {
            for _ in 0..5 {
                let m = random_hermitian(&mut rng, dim);
                let s = eig_hermitian(&m).unwrap();
                assert!(
                    s.reconstruction_residual(&m)
                        < tolerances::EIG_RECONSTRUCTION * (1.0 + m.max_abs())
                );
                assert!(s.orthonormality_defect() < tolerances::ORTHONORMAL);
                assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn exp_is_a_one_parameter_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = random_hermitian(&mut rng, 4);
            let (a, b): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let lhs = unitary_exp(&m, a)
                .unwrap()
                .matmul(&unitary_exp(&m, b).unwrap());
            let rhs = unitary_exp(&m, a + b).unwrap();
            assert!(lhs.sub(&rhs).max_abs() < 1e-9);
            assert!(rhs.unitarity_defect() < tolerances::UNITARY);
        }
    }

    #[test]
    fn apply_preserves_norm_for_random_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let u = random_unitary(&mut rng, 4);
            let s = StateVector::from_amplitudes(
                (0..4)
                    .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect(),
            )
            .normalized();
            let out = apply(&u, &s).unwrap();
            assert!((out.norm() - 1.0).abs() < tolerances::NORM);
        }
    }
}
