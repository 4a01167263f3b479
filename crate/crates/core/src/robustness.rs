//! Worst-case phase error of one RPE generation under coherent SPAM errors.
//!
//! The additive errors `(Δ_c, Δ_s)` move the measured point from the unit
//! vector `n̂ = (cos λ, sin λ)` to `n̂ + Δ⃗`. Writing `Δ_1`, `Δ_2` for the
//! components of `n̂ + Δ⃗` along `n̂` and `n̂⊥ = (−sin λ, cos λ)`, the phase
//! error is `δ_λ = atan2(Δ_2, Δ_1)` and a generation succeeds when
//! `|δ_λ| < π/3`, i.e. `|Δ_2| < √3·Δ_1`.
//!
//! `Δ_c` is enclosed in `[L_− + n̂·L⃗, L_+ + n̂·L⃗]` where `L_0`, `L⃗` depend on
//! the unknown phases only through `|A|` and `|B|`, and the leakage term is
//! bounded through `F_max` and `D = ε_l ε_l′`. `Δ_s` uses the same envelope
//! at `λ − π/2`. The box corners give four vertices per choice of
//! `(L_0, L_x, L_y)`; the worst case maximizes `|δ_λ|` over vertices and `λ`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::spam::{c_amplitude, check_amplitudes, SpamError};
use crate::trigpoly::TrigPoly;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Samples used by the dense-λ fallback and certification.
pub const FALLBACK_SAMPLES: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobustnessError {
    #[error(transparent)]
    Spam(#[from] SpamError),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// Which envelope to build from the bound terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    /// `Δ_c ∈ [L_− + n̂·L⃗, L_+ + n̂·L⃗]` with `L_y ∈ [−2|A||B|, 2|A||B|]`.
    /// Contains every exact `Δ_c`.
    #[default]
    Corrected,
    /// `Δ_c ∈ [L_− − n̂·L⃗, L_+ + n̂·L⃗]` with `L_y = |A||B|`, the bound as
    /// originally stated. Not a valid enclosure; kept for comparison.
    Published,
}

/// Error amplitudes of the preparation and (primed) unpreparation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Amplitudes {
    pub eps_c: f64,
    pub eps_l: f64,
    pub eps_c_prime: f64,
    pub eps_l_prime: f64,
}

impl Amplitudes {
    /// The tied slice: primed amplitudes equal to unprimed ones.
    pub fn tied(eps_c: f64, eps_l: f64) -> Self {
        Amplitudes {
            eps_c,
            eps_l,
            eps_c_prime: eps_c,
            eps_l_prime: eps_l,
        }
    }

    pub fn validate(&self) -> Result<(), RobustnessError> {
        check_amplitudes(self.eps_c, self.eps_l)?;
        check_amplitudes(self.eps_c_prime, self.eps_l_prime)?;
        Ok(())
    }
}

/// Phase-extremized ingredients of the envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    pub form: BoundForm,
    pub c: f64,
    pub c_prime: f64,
    /// Range of `|A|`.
    pub a_mag: (f64, f64),
    /// Range of `|B|`.
    pub b_mag: (f64, f64),
    /// `L_0 = |A|² − 1 + |B|²` extremes.
    pub l0: (f64, f64),
    /// `L_x = |A|² − 1 − |B|²` extremes.
    pub lx: (f64, f64),
    /// `L_y` extremes for the chosen form.
    pub ly: (f64, f64),
    pub f_max: f64,
    /// `D = ε_l ε_l′`.
    pub d: f64,
    pub l_plus: f64,
    pub l_minus: f64,
}

impl BoundTerms {
    pub fn new(amps: &Amplitudes, form: BoundForm) -> Result<Self, RobustnessError> {
        amps.validate()?;
        let c = c_amplitude(amps.eps_c, amps.eps_l);
        let cp = c_amplitude(amps.eps_c_prime, amps.eps_l_prime);
        let a_max = cp * c + amps.eps_c_prime * amps.eps_c;
        let a_min = (cp * c - amps.eps_c_prime * amps.eps_c).abs();
        let b_max = c * amps.eps_c_prime + cp * amps.eps_c;
        let b_min = (c * amps.eps_c_prime - cp * amps.eps_c).abs();
        let f_max = 2.0 * a_max.hypot(b_max);
        let d = amps.eps_l * amps.eps_l_prime;
        let l0 = (
            a_min * a_min + b_min * b_min - 1.0,
            a_max * a_max + b_max * b_max - 1.0,
        );
        let lx = (
            a_min * a_min - 1.0 - b_max * b_max,
            a_max * a_max - 1.0 - b_min * b_min,
        );
        let ly = match form {
            BoundForm::Corrected => (-2.0 * a_max * b_max, 2.0 * a_max * b_max),
            BoundForm::Published => (a_min * b_min, a_max * b_max),
        };
        let leak_up = 2.0 * d * (f_max + d);
        let leak_down = (f_max * f_max / 2.0).min(leak_up);
        Ok(BoundTerms {
            form,
            c,
            c_prime: cp,
            a_mag: (a_min, a_max),
            b_mag: (b_min, b_max),
            l0,
            lx,
            ly,
            f_max,
            d,
            l_plus: l0.1 + leak_up,
            l_minus: l0.0 - leak_down,
        })
    }

    fn n_dot_l_range(&self, lambda: f64) -> (f64, f64) {
        let (s, c) = lambda.sin_cos();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for lx in [self.lx.0, self.lx.1] {
            for ly in [self.ly.0, self.ly.1] {
                let v = lx * c + ly * s;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    /// `(Δ_c,min, Δ_c,max)` at `λ`.
    pub fn delta_c_envelope(&self, lambda: f64) -> (f64, f64) {
        let (lo, hi) = self.n_dot_l_range(lambda);
        match self.form {
            BoundForm::Corrected => (self.l_minus + lo, self.l_plus + hi),
            BoundForm::Published => (self.l_minus - hi, self.l_plus + hi),
        }
    }

    /// `(Δ_s,min, Δ_s,max)` at `λ`: the `Δ_c` envelope at `λ − π/2`.
    pub fn delta_s_envelope(&self, lambda: f64) -> (f64, f64) {
        self.delta_c_envelope(lambda - FRAC_PI_2)
    }

    /// The envelope's corner vertices, deduplicated.
    pub fn vertices(&self) -> Vec<Vertex> {
        let ells = [(self.l_minus, -1.0), (self.l_plus, 1.0)];
        let mut out: Vec<Vertex> = Vec::with_capacity(16);
        for &(ell_c, sc) in &ells {
            for &(ell_s, ss) in &ells {
                for lx in [self.lx.0, self.lx.1] {
                    for ly in [self.ly.0, self.ly.1] {
                        let (sigma_c, sigma_s) = match self.form {
                            BoundForm::Corrected => (1.0, 1.0),
                            BoundForm::Published => (sc, ss),
                        };
                        let v = Vertex {
                            ell_c,
                            ell_s,
                            sigma_c,
                            sigma_s,
                            lx,
                            ly,
                        };
                        if !out.contains(&v) {
                            out.push(v);
                        }
                    }
                }
            }
        }
        out
    }
}

/// `F_max = 2√((C′C + ε_c′ε_c)² + (Cε_c′ + C′ε_c)²)`.
pub fn f_max(amps: &Amplitudes) -> Result<f64, RobustnessError> {
    Ok(BoundTerms::new(amps, BoundForm::Corrected)?.f_max)
}

/// One corner of the `(Δ_c, Δ_s)` box as a function of `λ`:
/// `Δ_c = ℓ_c + σ_c(L_x cos λ + L_y sin λ)`,
/// `Δ_s = ℓ_s + σ_s(L_x sin λ − L_y cos λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub ell_c: f64,
    pub ell_s: f64,
    pub sigma_c: f64,
    pub sigma_s: f64,
    pub lx: f64,
    pub ly: f64,
}

/// A vertex resolved at one `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexTerms {
    /// Length of `ℓ⃗_0 = (ℓ_c, ℓ_s)`.
    pub ell0: f64,
    /// Angle of `ℓ⃗_0`.
    pub phi0: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl Vertex {
    pub fn is_same_sign(&self) -> bool {
        self.sigma_c == self.sigma_s
    }

    pub fn deltas(&self, lambda: f64) -> (f64, f64) {
        let (s, c) = lambda.sin_cos();
        (
            self.ell_c + self.sigma_c * (self.lx * c + self.ly * s),
            self.ell_s + self.sigma_s * (self.lx * s - self.ly * c),
        )
    }

    pub fn terms(&self, lambda: f64) -> VertexTerms {
        let (s, c) = lambda.sin_cos();
        let (dc, ds) = self.deltas(lambda);
        VertexTerms {
            ell0: self.ell_c.hypot(self.ell_s),
            phi0: self.ell_s.atan2(self.ell_c),
            delta1: 1.0 + dc * c + ds * s,
            delta2: ds * c - dc * s,
        }
    }

    fn polys(&self) -> (TrigPoly, TrigPoly) {
        let (cos, sin) = (TrigPoly::cos(), TrigPoly::sin());
        let dc = TrigPoly::constant(self.ell_c)
            .add(&cos.scale(self.sigma_c * self.lx))
            .add(&sin.scale(self.sigma_c * self.ly));
        let ds = TrigPoly::constant(self.ell_s)
            .add(&sin.scale(self.sigma_s * self.lx))
            .add(&cos.scale(-self.sigma_s * self.ly));
        let d1 = TrigPoly::constant(1.0)
            .add(&dc.mul(&cos))
            .add(&ds.mul(&sin));
        let d2 = ds.mul(&cos).add(&dc.mul(&sin).scale(-1.0));
        (d1, d2)
    }

    /// For a same-sign vertex `(Δ_1, Δ_2)` traces a circle of radius `|ℓ⃗_0|`
    /// around `(1 + σL_x, −σL_y)`.
    fn circle(&self) -> ((f64, f64), f64) {
        let sigma = self.sigma_c;
        (
            (1.0 + sigma * self.lx, -sigma * self.ly),
            self.ell_c.hypot(self.ell_s),
        )
    }
}

/// `|δ_λ|` of a point, `π/2` when `Δ_1 ≤ 0`.
pub fn delta_lambda(delta1: f64, delta2: f64) -> f64 {
    if delta1 <= 0.0 {
        FRAC_PI_2
    } else {
        delta2.atan2(delta1).abs().min(FRAC_PI_2)
    }
}

/// Extremes of one vertex over `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Extremes {
    value: f64,
    /// `max_λ (|Δ_2| − √3 Δ_1)`; negative exactly when every `λ` succeeds.
    margin: f64,
    saturated: bool,
}

fn circle_extremes(center: (f64, f64), r: f64) -> Extremes {
    let (x0, y0) = center;
    let margin = y0.abs() - SQRT_3 * x0 + 2.0 * r;
    if x0 - r <= 0.0 {
        return Extremes {
            value: FRAC_PI_2,
            margin,
            saturated: true,
        };
    }
    let value = (y0.atan2(x0).abs() + (r / x0.hypot(y0)).asin()).min(FRAC_PI_2);
    Extremes {
        value,
        margin,
        saturated: false,
    }
}

fn root_extremes(d1: &TrigPoly, d2: &TrigPoly) -> Option<Extremes> {
    let with_ends = |roots: Vec<f64>| {
        let mut r = roots;
        r.extend([0.0, PI]);
        r
    };
    let angle = d1
        .mul(&d2.derivative())
        .add(&d2.mul(&d1.derivative()).scale(-1.0));
    let angle_pts = with_ends(angle.roots().ok()?);
    let d1_pts = with_ends(d1.derivative().roots().ok()?);
    let up = d2.add(&d1.scale(-SQRT_3));
    let down = d2.scale(-1.0).add(&d1.scale(-SQRT_3));
    let up_pts = with_ends(up.derivative().roots().ok()?);
    let down_pts = with_ends(down.derivative().roots().ok()?);

    let margin = up_pts
        .iter()
        .map(|&l| up.eval(l))
        .chain(down_pts.iter().map(|&l| down.eval(l)))
        .fold(f64::NEG_INFINITY, f64::max);
    let min_d1 = d1_pts
        .iter()
        .map(|&l| d1.eval(l))
        .fold(f64::INFINITY, f64::min);
    if min_d1 <= 0.0 {
        return Some(Extremes {
            value: FRAC_PI_2,
            margin,
            saturated: true,
        });
    }
    let value = angle_pts
        .iter()
        .map(|&l| delta_lambda(d1.eval(l), d2.eval(l)))
        .fold(0.0, f64::max);
    Some(Extremes {
        value,
        margin,
        saturated: false,
    })
}

fn grid_extremes(d1: &TrigPoly, d2: &TrigPoly) -> Extremes {
    let mut ext = Extremes {
        value: 0.0,
        margin: f64::NEG_INFINITY,
        saturated: false,
    };
    for i in 0..FALLBACK_SAMPLES {
        let l = TAU * i as f64 / FALLBACK_SAMPLES as f64;
        let (x, y) = (d1.eval(l), d2.eval(l));
        ext.margin = ext.margin.max(y.abs() - SQRT_3 * x);
        ext.saturated |= x <= 0.0;
        ext.value = ext.value.max(delta_lambda(x, y));
    }
    ext
}

/// Worst case over the envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    /// `max |δ_λ|` in radians, clamped at `π/2`.
    pub value: f64,
    /// `max (|Δ_2| − √3 Δ_1)` over vertices and `λ`.
    pub margin: f64,
    /// Some vertex reaches `Δ_1 ≤ 0`.
    pub saturated: bool,
    /// Root finding failed (or disagreed with the dense-λ check) for some
    /// vertex and the dense-λ grid was used instead.
    pub fallback: bool,
}

impl WorstCase {
    pub fn succeeds(&self) -> bool {
        self.value < FRAC_PI_3
    }
}

/// `max |δ_λ|` over the envelope's vertices and all `λ`.
///
/// Same-sign vertices are circles in the `(Δ_1, Δ_2)` plane and are solved
/// by tangent geometry. Opposite-sign vertices (published form only) are
/// extremized through the real roots of `Δ_1Δ_2′ − Δ_2Δ_1′` and `Δ_1′`.
pub fn worst_case_delta_lambda(
    amps: &Amplitudes,
    form: BoundForm,
) -> Result<WorstCase, RobustnessError> {
    let terms = BoundTerms::new(amps, form)?;
    Ok(worst_case_from_terms(&terms))
}

pub fn worst_case_from_terms(terms: &BoundTerms) -> WorstCase {
    let mut out = WorstCase {
        value: 0.0,
        margin: f64::NEG_INFINITY,
        saturated: false,
        fallback: false,
    };
    for v in terms.vertices() {
        let ext = if v.is_same_sign() {
            let (center, r) = v.circle();
            circle_extremes(center, r)
        } else {
            let (d1, d2) = v.polys();
            match root_extremes(&d1, &d2) {
                Some(ext) if !cfg!(debug_assertions) => ext,
                Some(ext) => {
                    let grid = grid_extremes(&d1, &d2);
                    if grid.value > ext.value + 1e-9 || (grid.saturated && !ext.saturated) {
                        out.fallback = true;
                        grid
                    } else {
                        ext
                    }
                }
                None => {
                    out.fallback = true;
                    grid_extremes(&d1, &d2)
                }
            }
        };
        out.value = out.value.max(ext.value);
        out.margin = out.margin.max(ext.margin);
        out.saturated |= ext.saturated;
    }
    out
}

/// Dense search over every error phase, the leak overlap and `λ` using the
/// exact `Δ_c`, `Δ_s`. Phases and `λ` take `resolution` values on
/// `[0, 2π)`, `u` takes `resolution + 1` values on `[0, 1]`, so doubling the
/// resolution refines the grid.
pub fn brute_force_delta_lambda(
    amps: &Amplitudes,
    resolution: usize,
    exec: Execution,
) -> Result<f64, RobustnessError> {
    amps.validate()?;
    if resolution < 16 {
        return Err(RobustnessError::InvalidGrid(format!(
            "resolution must be at least 16, got {resolution}"
        )));
    }
    let r = resolution;
    let step = TAU / r as f64;
    let c = c_amplitude(amps.eps_c, amps.eps_l);
    let cp = c_amplitude(amps.eps_c_prime, amps.eps_l_prime);
    let d = amps.eps_l * amps.eps_l_prime;
    let lambdas: Vec<(f64, f64, Complex64, Complex64)> = (0..r)
        .map(|i| {
            let l = i as f64 * step;
            let (s, co) = l.sin_cos();
            (
                co,
                s,
                Complex64::from_polar(1.0, l),
                Complex64::from_polar(1.0, l - FRAC_PI_2),
            )
        })
        .collect();
    let leaks: Vec<Complex64> = (0..=r)
        .flat_map(|iu| {
            (0..r).map(move |ip| Complex64::from_polar(d * iu as f64 / r as f64, ip as f64 * step))
        })
        .collect();
    let one = Complex64::new(1.0, 0.0);

    let best = exec.max_indexed(r * r, |idx| {
        let (ep, epp) = ((idx / r) as f64 * step, (idx % r) as f64 * step);
        let a = Complex64::new(cp * c, 0.0)
            + Complex64::from_polar(amps.eps_c_prime * amps.eps_c, ep - epp);
        let b = Complex64::from_polar(c * amps.eps_c_prime, -epp)
            + Complex64::from_polar(cp * amps.eps_c, ep);
        let mut worst_ratio = 0.0f64;
        for &(co, s, ec, es) in &lambdas {
            let xc = 0.5 * a * (one + ec) + 0.5 * b * (one - ec);
            let xs = 0.5 * a * (one + es) + 0.5 * b * (one - es);
            let (pc, ps) = (0.5 * (1.0 + co), 0.5 * (1.0 + s));
            for y in &leaks {
                let dc = 2.0 * ((xc + y).norm_sqr() - pc);
                let ds = 2.0 * ((xs + y).norm_sqr() - ps);
                let vx = co + dc;
                let vy = s + ds;
                let d1 = vx * co + vy * s;
                let d2 = vy * co - vx * s;
                if d1 <= 0.0 {
                    return FRAC_PI_2;
                }
                worst_ratio = worst_ratio.max(d2.abs() / d1);
            }
        }
        worst_ratio.atan()
    });
    Ok(best.unwrap_or(0.0).min(FRAC_PI_2))
}

/// Which axis of the tied slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// `ε_c = ε_c′`, no leakage.
    Coherent,
    /// `ε_l = ε_l′`, no in-subspace error.
    Leakage,
}

impl Axis {
    fn amplitudes(self, eps: f64) -> Amplitudes {
        match self {
            Axis::Coherent => Amplitudes::tied(eps, 0.0),
            Axis::Leakage => Amplitudes::tied(0.0, eps),
        }
    }
}

/// Smallest error probability `ε²` on `axis` (up to `max_probability`) at
/// which the worst case reaches `π/3`, by scanning then bisecting.
pub fn axis_crossing(
    axis: Axis,
    form: BoundForm,
    max_probability: f64,
) -> Result<Option<f64>, RobustnessError> {
    let fails = |p: f64| -> Result<bool, RobustnessError> {
        Ok(!worst_case_delta_lambda(&axis.amplitudes(p.sqrt()), form)?.succeeds())
    };
    const SCAN: usize = 400;
    let mut lo = 0.0;
    for i in 1..=SCAN {
        let hi = max_probability * i as f64 / SCAN as f64;
        if fails(hi)? {
            let mut hi = hi;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if fails(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        lo = hi;
    }
    Ok(None)
}

/// Tied-slice grid parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Points per axis.
    pub n: usize,
    pub max_eps: f64,
    pub form: BoundForm,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n: 201,
            max_eps: 0.5,
            form: BoundForm::Corrected,
        }
    }
}

/// `max |δ_λ|` over the tied slice `ε_c = ε_c′`, `ε_l = ε_l′`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessGrid {
    pub spec: GridSpec,
    /// Shared axis values for `ε_c` and `ε_l`.
    pub axis: Vec<f64>,
    /// `values[i][j]` at `ε_c = axis[i]`, `ε_l = axis[j]`.
    pub values: Vec<Vec<f64>>,
    /// Cells where root finding fell back to the dense-λ grid.
    pub fallback_cells: usize,
}

pub fn success_region(spec: &GridSpec, exec: Execution) -> Result<RobustnessGrid, RobustnessError> {
    if spec.n < 2 {
        return Err(RobustnessError::InvalidGrid(format!(
            "need at least 2 points per axis, got {}",
            spec.n
        )));
    }
    if !(spec.max_eps >= 0.0 && 2.0 * spec.max_eps * spec.max_eps <= 1.0) {
        return Err(RobustnessError::InvalidGrid(format!(
            "max eps {} leaves the amplitude budget (need 0 <= eps <= 1/sqrt 2)",
            spec.max_eps
        )));
    }
    let n = spec.n;
    let axis: Vec<f64> = (0..n)
        .map(|i| spec.max_eps * i as f64 / (n - 1) as f64)
        .collect();
    let cells = exec.map_indexed(n * n, |idx| {
        let amps = Amplitudes::tied(axis[idx / n], axis[idx % n]);
        worst_case_delta_lambda(&amps, spec.form).expect("axes inside the amplitude budget")
    });
    let fallback_cells = cells.iter().filter(|w| w.fallback).count();
    let values = cells
        .chunks(n)
        .map(|row| row.iter().map(|w| w.value).collect())
        .collect();
    Ok(RobustnessGrid {
        spec: *spec,
        axis,
        values,
        fallback_cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum EdgeKey {
    /// Between `(i, j)` and `(i + 1, j)`.
    AlongC(usize, usize),
    /// Between `(i, j)` and `(i, j + 1)`.
    AlongL(usize, usize),
}

/// Count of outward decreases along each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub decreases_along_eps_c: usize,
    pub decreases_along_eps_l: usize,
    pub largest_decrease: f64,
}

impl RobustnessGrid {
    fn point(&self, key: EdgeKey, level: f64) -> (f64, f64) {
        let (i0, j0, i1, j1) = match key {
            EdgeKey::AlongC(i, j) => (i, j, i + 1, j),
            EdgeKey::AlongL(i, j) => (i, j, i, j + 1),
        };
        let (v0, v1) = (self.values[i0][j0], self.values[i1][j1]);
        let t = ((level - v0) / (v1 - v0)).clamp(0.0, 1.0);
        let lerp = |a: f64, b: f64| a + t * (b - a);
        (
            lerp(self.axis[i0], self.axis[i1]),
            lerp(self.axis[j0], self.axis[j1]),
        )
    }

    /// Level set `values = level` as polylines of `(ε_c, ε_l)` points
    /// (marching squares, saddles resolved by the cell-center average).
    pub fn contour(&self, level: f64) -> Vec<Vec<(f64, f64)>> {
        use std::collections::BTreeMap;
        let n = self.axis.len();
        let above = |i: usize, j: usize| self.values[i][j] >= level;
        let mut adj: BTreeMap<EdgeKey, Vec<EdgeKey>> = BTreeMap::new();
        let mut link = |a: EdgeKey, b: EdgeKey| {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        };
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let bottom = EdgeKey::AlongC(i, j);
                let top = EdgeKey::AlongC(i, j + 1);
                let left = EdgeKey::AlongL(i, j);
                let right = EdgeKey::AlongL(i + 1, j);
                let (c00, c10, c11, c01) = (
                    above(i, j),
                    above(i + 1, j),
                    above(i + 1, j + 1),
                    above(i, j + 1),
                );
                let crossed: Vec<EdgeKey> = [
                    (bottom, c00 != c10),
                    (right, c10 != c11),
                    (top, c01 != c11),
                    (left, c00 != c01),
                ]
                .into_iter()
                .filter(|(_, x)| *x)
                .map(|(k, _)| k)
                .collect();
                match crossed.len() {
                    2 => link(crossed[0], crossed[1]),
                    4 => {
                        let center = 0.25
                            * (self.values[i][j]
                                + self.values[i + 1][j]
                                + self.values[i + 1][j + 1]
                                + self.values[i][j + 1]);
                        if (center >= level) == c00 {
                            link(bottom, right);
                            link(top, left);
                        } else {
                            link(left, bottom);
                            link(right, top);
                        }
                    }
                    _ => {}
                }
            }
        }
        let mut visited: std::collections::BTreeSet<EdgeKey> = Default::default();
        let mut lines = Vec::new();
        let starts: Vec<EdgeKey> = adj
            .iter()
            .filter(|(_, v)| v.len() == 1)
            .map(|(k, _)| *k)
            .chain(adj.keys().copied())
            .collect();
        for start in starts {
            if visited.contains(&start) {
                continue;
            }
            let mut line = vec![self.point(start, level)];
            visited.insert(start);
            let mut cur = start;
            while let Some(&next) = adj[&cur].iter().find(|k| !visited.contains(k)) {
                visited.insert(next);
                line.push(self.point(next, level));
                cur = next;
            }
            if adj[&cur].contains(&start) && line.len() > 2 {
                line.push(line[0]);
            }
            lines.push(line);
        }
        lines
    }

    /// First crossing of `level` along an axis edge of the grid, as an error
    /// probability `ε²` (linear interpolation in `ε`).
    pub fn axis_crossing(&self, axis: Axis, level: f64) -> Option<f64> {
        let value = |k: usize| match axis {
            Axis::Coherent => self.values[k][0],
            Axis::Leakage => self.values[0][k],
        };
        (1..self.axis.len()).find(|&k| value(k) >= level).map(|k| {
            let (v0, v1) = (value(k - 1), value(k));
            let t = (level - v0) / (v1 - v0);
            let eps = self.axis[k - 1] + t * (self.axis[k] - self.axis[k - 1]);
            eps * eps
        })
    }

    pub fn monotonicity(&self) -> MonotonicityReport {
        let n = self.axis.len();
        let mut report = MonotonicityReport {
            decreases_along_eps_c: 0,
            decreases_along_eps_l: 0,
            largest_decrease: 0.0,
        };
        for i in 0..n {
            for j in 0..n {
                if i + 1 < n {
                    let drop = self.values[i][j] - self.values[i + 1][j];
                    if drop > 1e-12 {
                        report.decreases_along_eps_c += 1;
                        report.largest_decrease = report.largest_decrease.max(drop);
                    }
                }
                if j + 1 < n {
                    let drop = self.values[i][j] - self.values[i][j + 1];
                    if drop > 1e-12 {
                        report.decreases_along_eps_l += 1;
                        report.largest_decrease = report.largest_decrease.max(drop);
                    }
                }
            }
        }
        report
    }

    /// `eps_c,eps_l,delta_lambda_max` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps_c,eps_l,delta_lambda_max\n");
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{:.16e},{:.16e},{:.16e}",
                    self.axis[i], self.axis[j], v
                );
            }
        }
        out
    }
}

/// `polyline,eps_c,eps_l` rows.
pub fn contour_to_csv(lines: &[Vec<(f64, f64)>]) -> String {
    let mut out = String::from("polyline,eps_c,eps_l\n");
    for (k, line) in lines.iter().enumerate() {
        for (x, y) in line {
            let _ = writeln!(out, "{k},{x:.16e},{y:.16e}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spam::{exact_delta_c, exact_delta_s, LeakageOverlap, SpamParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_amplitudes(rng: &mut impl Rng, max: f64) -> Amplitudes {
        Amplitudes {
            eps_c: rng.random_range(0.0..max),
            eps_l: rng.random_range(0.0..max),
            eps_c_prime: rng.random_range(0.0..max),
            eps_l_prime: rng.random_range(0.0..max),
        }
    }

    fn full_draw(rng: &mut impl Rng, amps: &Amplitudes) -> (SpamParams, LeakageOverlap, f64) {
        let params = SpamParams {
            eps_c: amps.eps_c,
            eps_l: amps.eps_l,
            eps_p: rng.random_range(0.0..TAU),
            eps_c_prime: amps.eps_c_prime,
            eps_l_prime: amps.eps_l_prime,
            eps_p_prime: rng.random_range(0.0..TAU),
        };
        let overlap = LeakageOverlap {
            u: rng.random_range(0.0..=1.0),
            phase_u: rng.random_range(0.0..TAU),
        };
        (params, overlap, rng.random_range(0.0..TAU))
    }

    fn dense_vertex(v: &Vertex, samples: usize) -> (f64, bool) {
        let mut value = 0.0f64;
        let mut sat = false;
        for i in 0..samples {
            let t = v.terms(TAU * i as f64 / samples as f64);
            sat |= t.delta1 <= 0.0;
            value = value.max(delta_lambda(t.delta1, t.delta2));
        }
        (value, sat)
    }

    #[test]
    fn f_max_examples() {
        assert!((f_max(&Amplitudes::default()).unwrap() - 2.0).abs() < 1e-15);
        assert!(f_max(&Amplitudes::tied(0.0, 1.0)).unwrap().abs() < 1e-15);
        assert!((f_max(&Amplitudes::tied(1.0, 0.0)).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(
            f_max(&Amplitudes::tied(0.8, 0.8)),
            Err(RobustnessError::Spam(
                SpamError::AmplitudeBudgetExceeded { .. }
            ))
        ));
    }

    #[test]
    fn zero_errors() {
        for form in [BoundForm::Corrected, BoundForm::Published] {
            let t = BoundTerms::new(&Amplitudes::default(), form).unwrap();
            for i in 0..8 {
                assert_eq!(t.delta_c_envelope(i as f64), (0.0, 0.0));
            }
            let w = worst_case_delta_lambda(&Amplitudes::default(), form).unwrap();
            assert_eq!(w.value, 0.0);
            assert!(!w.saturated && !w.fallback);
        }
        assert!(
            brute_force_delta_lambda(&Amplitudes::default(), 16, Execution::Sequential).unwrap()
                < 1e-12
        );
    }

    #[test]
    fn leakage_only_envelope_width() {
        let e = 0.3f64;
        let t = BoundTerms::new(&Amplitudes::tied(0.0, e), BoundForm::Corrected).unwrap();
        let d = e * e;
        assert_eq!(t.ly, (0.0, 0.0));
        let c2 = 1.0 - d;
        assert!((t.lx.0 - (c2 * c2 - 1.0)).abs() < 1e-15 && t.lx.0 == t.lx.1);
        let leak = 2.0 * d * (t.f_max + d);
        for i in 0..10 {
            let (lo, hi) = t.delta_c_envelope(0.6 * i as f64);
            assert!((hi - lo - (leak + leak.min(t.f_max * t.f_max / 2.0))).abs() < 1e-12);
        }
    }

    #[test]
    fn corrected_envelope_contains_exact_deltas() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let amps = random_amplitudes(&mut rng, 0.7);
            if amps.validate().is_err() {
                continue;
            }
            let terms = BoundTerms::new(&amps, BoundForm::Corrected).unwrap();
            let (p, o, lambda) = full_draw(&mut rng, &amps);
            let dc = exact_delta_c(lambda, &p, &o);
            let ds = exact_delta_s(lambda, &p, &o);
            let (cl, ch) = terms.delta_c_envelope(lambda);
            let (sl, sh) = terms.delta_s_envelope(lambda);
            assert!(
                cl - 1e-12 <= dc && dc <= ch + 1e-12,
                "{amps:?} {p:?} {o:?} {lambda}"
            );
            assert!(sl - 1e-12 <= ds && ds <= sh + 1e-12);
        }
    }

    #[test]
    fn published_lower_bound_is_violated() {
        let e = 0.13f64.sqrt();
        let p = SpamParams {
            eps_l: e,
            eps_l_prime: e,
            ..Default::default()
        };
        let o = LeakageOverlap {
            u: 0.95,
            phase_u: PI,
        };
        let lambda = PI / 4.0;
        let dc = exact_delta_c(lambda, &p, &o);
        let (lo, _) = BoundTerms::new(&Amplitudes::tied(0.0, e), BoundForm::Published)
            .unwrap()
            .delta_c_envelope(lambda);
        assert!((dc + 0.7516).abs() < 1e-3);
        assert!(dc < lo);
        let (lo, _) = BoundTerms::new(&Amplitudes::tied(0.0, e), BoundForm::Corrected)
            .unwrap()
            .delta_c_envelope(lambda);
        assert!(dc >= lo);
    }

    #[test]
    fn circle_closed_form_matches_dense_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..300 {
            let amps = random_amplitudes(&mut rng, 0.5);
            for form in [BoundForm::Corrected, BoundForm::Published] {
                for v in BoundTerms::new(&amps, form)
                    .unwrap()
                    .vertices()
                    .iter()
                    .filter(|v| v.is_same_sign())
                {
                    let (center, r) = v.circle();
                    let ext = circle_extremes(center, r);
                    let (dense, sat) = dense_vertex(v, 8192);
                    if ext.saturated {
                        assert_eq!(ext.value, FRAC_PI_2);
                    } else {
                        assert!(!sat);
                        assert!(ext.value >= dense - 1e-12 && ext.value - dense < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn same_sign_margin_peaks_a_sixth_of_a_turn_from_phi0() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let samples = 1 << 14;
        for _ in 0..100 {
            let amps = random_amplitudes(&mut rng, 0.5);
            let terms = BoundTerms::new(&amps, BoundForm::Published).unwrap();
            for v in terms
                .vertices()
                .iter()
                .filter(|v| v.is_same_sign() && v.ell_c.hypot(v.ell_s) > 1e-3)
            {
                for sign in [1.0, -1.0] {
                    let best = (0..samples)
                        .map(|i| TAU * i as f64 / samples as f64)
                        .max_by(|&a, &b| {
                            let f = |l: f64| {
                                let t = v.terms(l);
                                sign * t.delta2 - SQRT_3 * t.delta1
                            };
                            f(a).total_cmp(&f(b))
                        })
                        .unwrap();
                    let phi0 = v.ell_s.atan2(v.ell_c);
                    let off = (best - phi0).rem_euclid(PI);
                    let to_sixth = (off - PI / 6.0).abs().min((off - 5.0 * PI / 6.0).abs());
                    assert!(to_sixth < 2.0 * TAU / samples as f64, "offset {off}");
                }
            }
        }
    }

    #[test]
    fn opposite_vertices_roots_match_dense_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut checked = 0;
        for _ in 0..200 {
            let amps = random_amplitudes(&mut rng, 0.4);
            for v in BoundTerms::new(&amps, BoundForm::Published)
                .unwrap()
                .vertices()
            {
                if v.is_same_sign() {
                    continue;
                }
                let (d1, d2) = v.polys();
                let ext = root_extremes(&d1, &d2).expect("roots");
                let (dense, sat) = dense_vertex(&v, 1 << 16);
                if ext.saturated {
                    assert!(ext.value == FRAC_PI_2);
                    continue;
                }
                assert!(!sat);
                // refine the dense maximum by golden-section search
                let n = 1 << 16;
                let f = |l: f64| {
                    let t = v.terms(l);
                    delta_lambda(t.delta1, t.delta2)
                };
                let i_best = (0..n)
                    .max_by(|&a, &b| {
                        f(TAU * a as f64 / n as f64).total_cmp(&f(TAU * b as f64 / n as f64))
                    })
                    .unwrap();
                let (mut a, mut b) = (
                    TAU * (i_best as f64 - 1.0) / n as f64,
                    TAU * (i_best as f64 + 1.0) / n as f64,
                );
                let g = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..80 {
                    let (x1, x2) = (b - g * (b - a), a + g * (b - a));
                    if f(x1) < f(x2) {
                        a = x1;
                    } else {
                        b = x2;
                    }
                }
                let refined = f(0.5 * (a + b)).max(dense);
                assert!(
                    (ext.value - refined).abs() < 1e-6,
                    "{} vs {}",
                    ext.value,
                    refined
                );
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn success_iff_negative_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..300 {
            let amps = random_amplitudes(&mut rng, 0.5);
            for form in [BoundForm::Corrected, BoundForm::Published] {
                let w = worst_case_delta_lambda(&amps, form).unwrap();
                assert_eq!(w.succeeds(), w.margin < 0.0, "{amps:?} {form:?} {w:?}");
                assert!(!w.fallback);
            }
        }
    }

    #[test]
    fn corrected_bound_dominates_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..25 {
            let amps = random_amplitudes(&mut rng, 0.5);
            let bound = worst_case_delta_lambda(&amps, BoundForm::Corrected)
                .unwrap()
                .value;
            let brute = brute_force_delta_lambda(&amps, 16, Execution::Parallel).unwrap();
            assert!(bound >= brute - 1e-12, "{amps:?}: {bound} < {brute}");
        }
    }

    #[test]
    fn brute_force_refines_monotonically() {
        let amps = Amplitudes {
            eps_c: 0.2,
            eps_l: 0.15,
            eps_c_prime: 0.1,
            eps_l_prime: 0.25,
        };
        let coarse = brute_force_delta_lambda(&amps, 16, Execution::Sequential).unwrap();
        let fine = brute_force_delta_lambda(&amps, 32, Execution::Parallel).unwrap();
        assert!(fine >= coarse);
        assert!(brute_force_delta_lambda(&amps, 8, Execution::Sequential).is_err());
    }

    #[test]
    fn small_grid() {
        let spec = GridSpec {
            n: 3,
            max_eps: 0.0,
            form: BoundForm::Corrected,
        };
        let g = success_region(&spec, Execution::Sequential).unwrap();
        assert!(g.values.iter().flatten().all(|v| *v == 0.0));
        assert!(success_region(&GridSpec { n: 1, ..spec }, Execution::Sequential).is_err());
        assert!(success_region(
            &GridSpec {
                max_eps: 0.8,
                ..spec
            },
            Execution::Sequential
        )
        .is_err());
        let csv = g.to_csv();
        assert!(csv.starts_with("eps_c,eps_l,delta_lambda_max\n"));
        assert_eq!(csv.lines().count(), 10);
    }

    #[test]
    fn grid_orders_agree_and_contour_is_on_level() {
        let spec = GridSpec {
            n: 21,
            max_eps: 0.5,
            form: BoundForm::Corrected,
        };
        let seq = success_region(&spec, Execution::Sequential).unwrap();
        let par = success_region(&spec, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq.values[0][0], 0.0);
        let lines = seq.contour(FRAC_PI_3);
        assert!(!lines.is_empty());
        for line in &lines {
            for &(x, y) in line {
                let w = worst_case_delta_lambda(&Amplitudes::tied(x, y), BoundForm::Corrected)
                    .unwrap()
                    .value;
                // linear interpolation on a coarse grid
                assert!((w - FRAC_PI_3).abs() < 0.15, "({x},{y}) -> {w}");
            }
        }
        let leak = seq.axis_crossing(Axis::Leakage, FRAC_PI_3).unwrap();
        let exact = axis_crossing(Axis::Leakage, BoundForm::Corrected, 0.25)
            .unwrap()
            .unwrap();
        assert!((leak - exact).abs() < 0.01);
    }

    #[test]
    fn marching_squares_on_a_cone() {
        // values = distance from origin: the level set is a quarter circle
        let n = 41;
        let axis: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let values = axis
            .iter()
            .map(|x| axis.iter().map(|y| x.hypot(*y)).collect())
            .collect();
        let grid = RobustnessGrid {
            spec: GridSpec {
                n,
                max_eps: 1.0,
                form: BoundForm::Corrected,
            },
            axis,
            values,
            fallback_cells: 0,
        };
        let lines = grid.contour(0.5);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].len() > 20);
        for (x, y) in &lines[0] {
            assert!((x.hypot(*y) - 0.5).abs() < 2e-3);
        }
        assert!((grid.axis_crossing(Axis::Leakage, 0.5).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(grid.monotonicity().decreases_along_eps_c, 0);
    }
}
