//! Coherent state-preparation-and-measurement errors.
//!
//! An erroneous preparation of `|χ_β⟩ = (|E_a⟩ + e^{iβ}|E_b⟩)/√2` is
//!
//! ```text
//! C/√2 (|E_a⟩ + e^{iβ}|E_b⟩) + ε_c e^{iε_p}/√2 (|E_a⟩ − e^{iβ}|E_b⟩) + ε_l |ε_l⟩
//! ```
//!
//! with `C² = 1 − ε_c² − ε_l²` and `|ε_l⟩` outside the target subspace. The
//! unpreparation carries its own primed parameters. Here `λ` is the phase
//! that `W^k` puts on `|E_b⟩` relative to `|E_a⟩`, and `u·e^{i·phase_u}` is
//! the overlap of the unprepared leak vector with the evolved prepared one.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{ComplexMatrix, Spectrum, StateVector};
use crate::tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpamError {
    #[error("amplitude {name} = {value} is outside [0, 1]")]
    InvalidAmplitude { name: &'static str, value: f64 },
    #[error("amplitude budget exceeded: eps_c² + eps_l² = {budget} > 1")]
    AmplitudeBudgetExceeded { budget: f64 },
    #[error("leak overlap u = {0} is outside [0, 1]")]
    InvalidOverlap(f64),
    #[error(
        "leak vector is not a unit vector orthogonal to the target pair (defect {defect:.3e})"
    )]
    LeakNotOrthogonal { defect: f64 },
    #[error("a nonzero leakage amplitude needs a leak vector")]
    MissingLeakVector,
    #[error("dimension {dim} leaves no room for the requested leak vectors")]
    LeakSpaceTooSmall { dim: usize },
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
}

/// Prepare-side and unprepare-side (primed) error amplitudes and phases.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpamParams {
    pub eps_c: f64,
    pub eps_l: f64,
    pub eps_p: f64,
    pub eps_c_prime: f64,
    pub eps_l_prime: f64,
    pub eps_p_prime: f64,
}

impl SpamParams {
    pub fn validate(&self) -> Result<(), SpamError> {
        check_amplitudes(self.eps_c, self.eps_l)?;
        check_amplitudes(self.eps_c_prime, self.eps_l_prime)
    }

    /// `C = √(1 − ε_c² − ε_l²)`.
    pub fn c(&self) -> f64 {
        c_amplitude(self.eps_c, self.eps_l)
    }

    pub fn c_prime(&self) -> f64 {
        c_amplitude(self.eps_c_prime, self.eps_l_prime)
    }

    /// `A = C′C + ε_c′ε_c e^{i(ε_p − ε_p′)}`.
    pub fn a_coefficient(&self) -> Complex64 {
        Complex64::new(self.c_prime() * self.c(), 0.0)
            + Complex64::from_polar(self.eps_c_prime * self.eps_c, self.eps_p - self.eps_p_prime)
    }

    /// `B = C ε_c′ e^{−iε_p′} + C′ ε_c e^{iε_p}`.
    pub fn b_coefficient(&self) -> Complex64 {
        Complex64::from_polar(self.c() * self.eps_c_prime, -self.eps_p_prime)
            + Complex64::from_polar(self.c_prime() * self.eps_c, self.eps_p)
    }
}

pub(crate) fn check_amplitudes(eps_c: f64, eps_l: f64) -> Result<(), SpamError> {
    for (name, value) in [("eps_c", eps_c), ("eps_l", eps_l)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(SpamError::InvalidAmplitude { name, value });
        }
    }
    let budget = eps_c * eps_c + eps_l * eps_l;
    if budget > 1.0 + 1e-12 {
        return Err(SpamError::AmplitudeBudgetExceeded { budget });
    }
    Ok(())
}

pub(crate) fn c_amplitude(eps_c: f64, eps_l: f64) -> f64 {
    (1.0 - eps_c * eps_c - eps_l * eps_l).max(0.0).sqrt()
}

/// `⟨ε_l′| W^k |ε_l⟩ = u·e^{i·phase_u}` up to the global phase of `W^k`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LeakageOverlap {
    pub u: f64,
    pub phase_u: f64,
}

impl LeakageOverlap {
    pub fn validate(&self) -> Result<(), SpamError> {
        if (0.0..=1.0).contains(&self.u) {
            Ok(())
        } else {
            Err(SpamError::InvalidOverlap(self.u))
        }
    }
}

/// The erroneous preparation state for the pair `(a, b)`.
#[allow(clippy::too_many_arguments)]
pub fn erroneous_prep_state(
    spectrum: &Spectrum,
    a: usize,
    b: usize,
    beta: f64,
    eps_c: f64,
    eps_p: f64,
    eps_l: f64,
    leak: Option<&StateVector>,
) -> Result<StateVector, SpamError> {
    check_amplitudes(eps_c, eps_l)?;
    check_pair(spectrum, a, b)?;
    let (ea, eb) = (spectrum.eigenvector(a), spectrum.eigenvector(b));
    let phase_b = Complex64::from_polar(1.0, beta);
    let c = c_amplitude(eps_c, eps_l);
    let sym = ea.add(&eb.scale(phase_b));
    let anti = ea.sub(&eb.scale(phase_b));
    let mut state = sym
        .scale(Complex64::new(c * FRAC_1_SQRT_2, 0.0))
        .add(&anti.scale(Complex64::from_polar(eps_c * FRAC_1_SQRT_2, eps_p)));
    match leak {
        Some(l) => {
            let defect = leak_defect(&ea, &eb, l);
            if defect > tolerances::LEAK_ORTHOGONAL {
                return Err(SpamError::LeakNotOrthogonal { defect });
            }
            state = state.add(&l.scale(Complex64::new(eps_l, 0.0)));
        }
        None if eps_l > 0.0 => return Err(SpamError::MissingLeakVector),
        None => {}
    }
    Ok(state)
}

fn check_pair(spectrum: &Spectrum, a: usize, b: usize) -> Result<(), SpamError> {
    let dim = spectrum.dim();
    for index in [a, b] {
        if index >= dim {
            return Err(SpamError::IndexOutOfRange { index, dim });
        }
    }
    Ok(())
}

fn leak_defect(ea: &StateVector, eb: &StateVector, l: &StateVector) -> f64 {
    (l.norm() - 1.0)
        .abs()
        .max(ea.inner(l).norm())
        .max(eb.inner(l).norm())
}

/// Closed-form `P̃ = |½A(1 + e^{iλ}) + ½B(1 − e^{iλ}) + ε_l ε_l′ u e^{i·phase_u}|²`.
pub fn exact_erroneous_probability(
    lambda: f64,
    params: &SpamParams,
    overlap: &LeakageOverlap,
) -> f64 {
    overlap_amplitude(lambda, params, overlap).norm_sqr()
}

fn overlap_amplitude(lambda: f64, params: &SpamParams, overlap: &LeakageOverlap) -> Complex64 {
    let e = Complex64::from_polar(1.0, lambda);
    let one = Complex64::new(1.0, 0.0);
    0.5 * params.a_coefficient() * (one + e)
        + 0.5 * params.b_coefficient() * (one - e)
        + Complex64::from_polar(
            params.eps_l * params.eps_l_prime * overlap.u,
            overlap.phase_u,
        )
}

/// `Δ_c = 2(P̃(λ) − (1 + cos λ)/2)`.
pub fn exact_delta_c(lambda: f64, params: &SpamParams, overlap: &LeakageOverlap) -> f64 {
    2.0 * (exact_erroneous_probability(lambda, params, overlap) - 0.5 * (1.0 + lambda.cos()))
}

/// `Δ_s(λ) = Δ_c(λ − π/2)`.
pub fn exact_delta_s(lambda: f64, params: &SpamParams, overlap: &LeakageOverlap) -> f64 {
    exact_delta_c(lambda - FRAC_PI_2, params, overlap)
}

/// Orthonormal vectors spanning the complement of `{|E_a⟩, |E_b⟩} ∪ extra`,
/// taken by Gram-Schmidt over the computational basis.
fn complement_basis(
    spectrum: &Spectrum,
    a: usize,
    b: usize,
    extra: &[StateVector],
    want: usize,
) -> Vec<StateVector> {
    let mut span: Vec<StateVector> = vec![spectrum.eigenvector(a), spectrum.eigenvector(b)];
    span.extend(extra.iter().cloned());
    let mut out = Vec::new();
    for i in 0..spectrum.dim() {
        if out.len() == want {
            break;
        }
        let mut v = StateVector::basis(spectrum.dim(), i);
        for _ in 0..2 {
            for s in span.iter().chain(&out) {
                v = v.sub(&s.scale(s.inner(&v)));
            }
        }
        if v.norm() > 1e-6 {
            out.push(v.normalized());
        }
    }
    out
}

/// Leak vectors `(|ε_l⟩, |ε_l′⟩)` with `⟨ε_l′| G |ε_l⟩ = u·e^{i·phase_u}`,
/// where `G` is `evolution` (pass the identity for the static overlap).
/// `evolution` must preserve the target pair's span.
///
/// `|ε_l⟩ = f₁` and `|ε_l′⟩ = u e^{−i·phase_u} G f₁ + √(1 − u²) f₂` with
/// `f₂ ⟂ {E_a, E_b, G f₁}`.
pub fn leak_pair(
    spectrum: &Spectrum,
    a: usize,
    b: usize,
    overlap: &LeakageOverlap,
    evolution: &ComplexMatrix,
) -> Result<(StateVector, StateVector), SpamError> {
    overlap.validate()?;
    check_pair(spectrum, a, b)?;
    let dim = spectrum.dim();
    let f1 = complement_basis(spectrum, a, b, &[], 1)
        .pop()
        .ok_or(SpamError::LeakSpaceTooSmall { dim })?;
    let g =
        crate::numerics::apply(evolution, &f1).map_err(|_| SpamError::LeakSpaceTooSmall { dim })?;
    let primed = if overlap.u >= 1.0 {
        g.scale(Complex64::from_polar(1.0, -overlap.phase_u))
    } else {
        let f2 = complement_basis(spectrum, a, b, std::slice::from_ref(&g), 1)
            .pop()
            .ok_or(SpamError::LeakSpaceTooSmall { dim })?;
        g.scale(Complex64::from_polar(overlap.u, -overlap.phase_u))
            .add(&f2.scale(Complex64::new((1.0 - overlap.u * overlap.u).sqrt(), 0.0)))
    };
    Ok((f1, primed))
}
