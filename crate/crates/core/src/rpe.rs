//! Multi-generation robust phase estimation of `θ_ab = τ(E_b − E_a) mod 2π`.
//!
//! Generation `g` runs the evolution `W^{k_g}` with `k_g = 2^g` between a
//! preparation of `(|E_a⟩ + e^{iβ}|E_b⟩)/√2` (β = 0 for the cosine circuit,
//! β = π/2 for the sine circuit) and the inverse β = 0 preparation. The
//! all-zeros outcome has probability `P_c = (1 + cos kθ)/2` or
//! `P_s = (1 + sin kθ)/2`. Each generation reads `λ = kθ mod 2π` from the
//! two probabilities and picks the branch `(λ + 2πm)/k` nearest the
//! previous estimate.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::{preparation_circuit, simulate, Circuit, CircuitError};
use crate::exec::Execution;
use crate::hamiltonians::{HamiltonianError, PauliHamiltonian};
use crate::numerics::{NumericsError, Spectrum, StateVector};
use crate::tolerances;

/// Largest supported generation count; `k = 2^g` stays exact in `f64`.
pub const MAX_GENERATIONS: u32 = 52;

#[derive(Debug, Error)]
pub enum RpeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("pair graph does not connect all {n} levels")]
    DisconnectedPairGraph { n: usize },
    #[error("pairwise differences are inconsistent (residual {residual:.3e})")]
    InconsistentDifferences { residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Mode {
    #[default]
    Exact,
    Sampled {
        shots: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpeConfig {
    pub a: usize,
    pub b: usize,
    pub generations: u32,
    pub mode: Mode,
    pub tau: f64,
}

impl RpeConfig {
    pub fn validate(&self, dim: usize) -> Result<(), RpeError> {
        let bad = |m: String| Err(RpeError::InvalidConfig(m));
        if self.generations == 0 || self.generations > MAX_GENERATIONS {
            return bad(format!(
                "generations must be in 1..={MAX_GENERATIONS}, got {}",
                self.generations
            ));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return bad(format!(
                "time scale must be finite and positive, got {}",
                self.tau
            ));
        }
        if let Mode::Sampled { shots: 0, .. } = self.mode {
            return bad("shots must be at least 1".into());
        }
        for index in [self.a, self.b] {
            if index >= dim {
                return Err(CircuitError::IndexOutOfRange { index, dim }.into());
            }
        }
        if self.a == self.b {
            return Err(CircuitError::EqualIndices(self.a).into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub g: u32,
    pub k: u64,
    pub p_c: f64,
    pub p_s: f64,
    pub lambda: f64,
    pub theta: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpeResult {
    pub config: RpeConfig,
    pub records: Vec<GenerationRecord>,
    pub theta_final: f64,
}

impl RpeResult {
    pub fn any_degenerate(&self) -> bool {
        self.records.iter().any(|r| r.degenerate)
    }

    /// `θ_final / τ`, the estimated `E_b − E_a` under `unwrap`.
    pub fn energy_difference(&self, unwrap: Unwrap) -> f64 {
        unwrap.apply(self.theta_final, self.config.a, self.config.b) / self.config.tau
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// Per-generation rows `g,k,p_c,p_s,lambda,theta,degenerate`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("g,k,p_c,p_s,lambda,theta,degenerate\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.g, r.k, r.p_c, r.p_s, r.lambda, r.theta, r.degenerate
            );
        }
        out
    }
}

/// `(P_c, P_s) = ((1 + cos kθ)/2, (1 + sin kθ)/2)`.
pub fn ideal_probabilities(theta: f64, k: u64) -> (f64, f64) {
    let (s, c) = (k as f64 * theta).sin_cos();
    ((1.0 + c) / 2.0, (1.0 + s) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseReading {
    pub lambda: f64,
    pub degenerate: bool,
}

/// Angle in `[0, 2π)` with cosine component `2P_c − 1` and sine component
/// `2P_s − 1`. Both components vanishing flags the reading as degenerate.
pub fn phase_from_probabilities(p_c: f64, p_s: f64) -> PhaseReading {
    let (x, y) = (2.0 * p_c - 1.0, 2.0 * p_s - 1.0);
    if x.abs() <= 1e-12 && y.abs() <= 1e-12 {
        return PhaseReading {
            lambda: 0.0,
            degenerate: true,
        };
    }
    PhaseReading {
        lambda: wrap(y.atan2(x)),
        degenerate: false,
    }
}

fn wrap(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn circular_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Branch `θ = (λ + 2πm)/k mod 2π` nearest `theta_prev` on the circle, the
/// smaller candidate winning ties. Without a previous estimate returns
/// `λ/k`.
pub fn select_branch(lambda: f64, k: u64, theta_prev: Option<f64>) -> f64 {
    let kf = k as f64;
    let Some(prev) = theta_prev else {
        return wrap(lambda / kf);
    };
    let m0 = ((kf * prev - lambda) / TAU).round();
    let mut best: Option<(f64, f64)> = None;
    for dm in [-1.0, 0.0, 1.0] {
        let theta = wrap((lambda + TAU * (m0 + dm)) / kf);
        let dist = circular_distance(theta, prev);
        best = match best {
            Some((bt, bd)) if bd < dist || (bd == dist && bt <= theta) => Some((bt, bd)),
            _ => Some((theta, dist)),
        };
    }
    best.expect("three candidates").0
}

/// Runs the generation loop with probabilities supplied by `measure(g, k)`.
pub fn run_generations(
    generations: u32,
    mut measure: impl FnMut(u32, u64) -> (f64, f64),
) -> Vec<GenerationRecord> {
    let mut records = Vec::with_capacity(generations as usize);
    let mut prev: Option<f64> = None;
    for g in 0..generations {
        let k = 1u64 << g;
        let (p_c, p_s) = measure(g, k);
        let reading = phase_from_probabilities(p_c, p_s);
        let theta = select_branch(reading.lambda, k, prev);
        prev = Some(theta);
        records.push(GenerationRecord {
            g,
            k,
            p_c,
            p_s,
            lambda: reading.lambda,
            theta,
            degenerate: reading.degenerate,
        });
    }
    records
}

/// Circuits and spectrum for estimating one eigenvalue difference.
#[derive(Debug, Clone)]
pub struct Experiment {
    spectrum: Spectrum,
    a: usize,
    b: usize,
    tau: f64,
    prepared_c: StateVector,
    prepared_s: StateVector,
    unprepare: Circuit,
}

impl Experiment {
    pub fn new(h: &PauliHamiltonian, a: usize, b: usize, tau: f64) -> Result<Self, RpeError> {
        Self::from_spectrum(h.spectrum()?, a, b, tau)
    }

    pub fn from_spectrum(
        spectrum: Spectrum,
        a: usize,
        b: usize,
        tau: f64,
    ) -> Result<Self, RpeError> {
        let probe = RpeConfig {
            a,
            b,
            generations: 1,
            mode: Mode::Exact,
            tau,
        };
        probe.validate(spectrum.dim())?;
        let n = spectrum.dim().trailing_zeros() as usize;
        let zero = StateVector::zero_state(n);
        let prep_c = preparation_circuit(&spectrum, a, b, 0.0)?;
        let prep_s = preparation_circuit(&spectrum, a, b, PI / 2.0)?;
        Ok(Experiment {
            prepared_c: simulate(&prep_c, &zero)?,
            prepared_s: simulate(&prep_s, &zero)?,
            unprepare: prep_c.inverse(),
            spectrum,
            a,
            b,
            tau,
        })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    /// `E_b − E_a` from the classical spectrum.
    pub fn true_difference(&self) -> f64 {
        self.spectrum.eigenvalues[self.b] - self.spectrum.eigenvalues[self.a]
    }

    /// `τ(E_b − E_a) mod 2π`.
    pub fn true_theta(&self) -> f64 {
        wrap(self.tau * self.true_difference())
    }

    /// All-zeros probabilities `(P_c, P_s)` of the two circuits at power `k`,
    /// by statevector simulation.
    pub fn probabilities(&self, k: u64) -> Result<(f64, f64), RpeError> {
        let w = self.spectrum.exp_unitary(self.tau * k as f64);
        let zero_prob = |prepared: &StateVector| -> Result<f64, RpeError> {
            let evolved = crate::numerics::apply(&w, prepared)?;
            Ok(simulate(&self.unprepare, &evolved)?.probability(0))
        };
        Ok((zero_prob(&self.prepared_c)?, zero_prob(&self.prepared_s)?))
    }

    /// Exact probabilities for generations `0..generations`.
    pub fn probability_table(&self, generations: u32) -> Result<Vec<(f64, f64)>, RpeError> {
        (0..generations)
            .map(|g| self.probabilities(1u64 << g))
            .collect()
    }
}

/// Estimates from a precomputed probability table. Sampled mode draws
/// `Binomial(M, P)/M` per circuit from a ChaCha stream selected by `stream`.
pub fn estimate_from_table(table: &[(f64, f64)], config: &RpeConfig, stream: u64) -> RpeResult {
    let records = match config.mode {
        Mode::Exact => run_generations(config.generations, |g, _| table[g as usize]),
        Mode::Sampled { shots, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let mut draw = |p: f64| {
                let p = p.clamp(0.0, 1.0);
                Binomial::new(shots, p)
                    .expect("p in [0,1]")
                    .sample(&mut rng) as f64
                    / shots as f64
            };
            run_generations(config.generations, |g, _| {
                let (p_c, p_s) = table[g as usize];
                (draw(p_c), draw(p_s))
            })
        }
    };
    let theta_final = records.last().map(|r| r.theta).unwrap_or(0.0);
    RpeResult {
        config: *config,
        records,
        theta_final,
    }
}

/// Full protocol on `h` for `config`, using RNG stream 0 in sampled mode.
pub fn run_rpe(h: &PauliHamiltonian, config: &RpeConfig) -> Result<RpeResult, RpeError> {
    config.validate(h.dim())?;
    let experiment = Experiment::new(h, config.a, config.b, config.tau)?;
    run_experiment(&experiment, config)
}

pub fn run_experiment(experiment: &Experiment, config: &RpeConfig) -> Result<RpeResult, RpeError> {
    config.validate(experiment.spectrum.dim())?;
    let table = experiment.probability_table(config.generations)?;
    Ok(estimate_from_table(&table, config, 0))
}

/// Estimator driven by ideal probabilities at the true angle plus additive
/// errors: `P̃ = P + Δ/2` with `(Δ_c, Δ_s) = perturb(g, k, kθ mod 2π)`.
/// Perturbed probabilities are passed through unclamped.
pub fn run_with_perturbation(
    theta_true: f64,
    generations: u32,
    mut perturb: impl FnMut(u32, u64, f64) -> (f64, f64),
) -> Vec<GenerationRecord> {
    run_generations(generations, |g, k| {
        let (p_c, p_s) = ideal_probabilities(theta_true, k);
        let (d_c, d_s) = perturb(g, k, wrap(k as f64 * theta_true));
        (p_c + d_c / 2.0, p_s + d_s / 2.0)
    })
}

/// Generations whose estimate is farther than `(π/3)/k` from the truth.
pub fn branch_failures(records: &[GenerationRecord], theta_true: f64) -> Vec<u32> {
    records
        .iter()
        .filter(|r| circular_distance(r.theta, theta_true) >= PI / 3.0 / r.k as f64)
        .map(|r| r.g)
        .collect()
}

/// How a wrapped angle `θ_ab ∈ [0, 2π)` is mapped to a signed difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Unwrap {
    /// Representative in `(−π, π]`.
    #[default]
    Symmetric,
    /// Uses the sign implied by the eigenvalue ordering (`E_b ≥ E_a` when
    /// `b > a`); suited to [`auto_tau`], which keeps `|τΔE| ≤ 0.9·2π`.
    Ordered,
}

impl Unwrap {
    pub fn apply(self, theta: f64, a: usize, b: usize) -> f64 {
        let theta = wrap(theta);
        match self {
            Unwrap::Symmetric => {
                if theta > PI {
                    theta - TAU
                } else {
                    theta
                }
            }
            Unwrap::Ordered => {
                if b > a {
                    if theta < 0.95 * TAU {
                        theta
                    } else {
                        theta - TAU
                    }
                } else if theta > 0.05 * TAU {
                    theta - TAU
                } else {
                    theta
                }
            }
        }
    }
}

/// `τ = 0.9·2π/(E_max − E_min)`, or 1 for a flat spectrum.
pub fn auto_tau(eigenvalues: &[f64]) -> f64 {
    let max = eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max - min;
    if spread.is_finite() && spread > 1e-300 {
        0.9 * TAU / spread
    } else {
        1.0
    }
}

/// Absolute energies from signed differences `d_ab ≈ τ(E_b − E_a)` and the
/// trace. The pairs must connect all `n` levels.
pub fn reconstruct_energies(
    diffs: &[((usize, usize), f64)],
    trace: f64,
    tau: f64,
    n: usize,
) -> Result<Vec<f64>, RpeError> {
    if n == 0 {
        return Err(RpeError::InvalidConfig("need at least one level".into()));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(RpeError::InvalidConfig(format!(
            "time scale must be finite and positive, got {tau}"
        )));
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &((a, b), _) in diffs {
        for index in [a, b] {
            if index >= n {
                return Err(CircuitError::IndexOutOfRange { index, dim: n }.into());
            }
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let root = find(&mut parent, 0);
    if (1..n).any(|i| find(&mut parent, i) != root) {
        return Err(RpeError::DisconnectedPairGraph { n });
    }

    let rows = diffs.len() + 1;
    let mut m = DMatrix::<f64>::zeros(rows, n);
    let mut rhs = DVector::<f64>::zeros(rows);
    for (r, &((a, b), d)) in diffs.iter().enumerate() {
        m[(r, b)] += 1.0;
        m[(r, a)] -= 1.0;
        rhs[r] = d / tau;
    }
    for c in 0..n {
        m[(rows - 1, c)] = 1.0;
    }
    rhs[rows - 1] = trace;
    let svd = m.clone().svd(true, true);
    let energies = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| RpeError::InvalidConfig(e.to_string()))?;
    let residual = (&m * &energies - &rhs).amax();
    if residual > tolerances::RECONSTRUCTION_RESIDUAL {
        return Err(RpeError::InconsistentDifferences { residual });
    }
    Ok(energies.iter().copied().collect())
}

/// Per-trial, per-generation absolute phase errors and their summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    /// `errors[trial][g]`, circular distance to the true angle.
    pub errors: Vec<Vec<f64>>,
    pub medians: Vec<f64>,
    /// Least-squares slope of `log2(median)` against `g`; absent in exact mode.
    pub slope: Option<f64>,
}

impl ScalingStudy {
    /// Rows `trial,g,abs_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,g,abs_error\n");
        for (t, row) in self.errors.iter().enumerate() {
            for (g, e) in row.iter().enumerate() {
                let _ = writeln!(out, "{t},{g},{e:.16e}");
            }
        }
        out
    }
}

/// Repeats the estimator `trials` times (stream = trial index) and records
/// errors against the classical answer.
pub fn scaling_study(
    experiment: &Experiment,
    config: &RpeConfig,
    trials: usize,
    exec: Execution,
) -> Result<ScalingStudy, RpeError> {
    config.validate(experiment.spectrum.dim())?;
    if trials == 0 {
        return Err(RpeError::InvalidConfig("trials must be at least 1".into()));
    }
    let table = experiment.probability_table(config.generations)?;
    let truth = experiment.true_theta();
    let errors = exec.map_indexed(trials, |t| {
        let result = estimate_from_table(&table, config, t as u64);
        result
            .records
            .iter()
            .map(|r| circular_distance(r.theta, truth))
            .collect::<Vec<f64>>()
    });
    let medians: Vec<f64> = (0..config.generations as usize)
        .map(|g| median(errors.iter().map(|row| row[g]).collect()))
        .collect();
    let slope = match config.mode {
        Mode::Exact => None,
        Mode::Sampled { .. } => log2_slope(&medians),
    };
    Ok(ScalingStudy {
        errors,
        medians,
        slope,
    })
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Slope of `log2(y_g)` against `g`; `None` when fewer than two positive
/// values exist.
pub fn log2_slope(y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = y
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(g, v)| (g as f64, v.log2()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
