//! Real trigonometric polynomials `Σ a_k cos kλ + b_k sin kλ` and their real
//! roots, found through the algebraic form `p1(c) + p2(c)·s` with `c = cos λ`,
//! `s = sin λ`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, Schur};

use crate::tolerances;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct TrigPoly {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

/// The root finder could not account for every sign change of the polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RootFailure;

impl TrigPoly {
    pub fn new(mut cos: Vec<f64>, mut sin: Vec<f64>) -> Self {
        let n = cos.len().max(sin.len()).max(1);
        cos.resize(n, 0.0);
        sin.resize(n, 0.0);
        sin[0] = 0.0;
        TrigPoly { cos, sin }
    }

    pub fn constant(c: f64) -> Self {
        TrigPoly::new(vec![c], vec![0.0])
    }

    pub fn cos() -> Self {
        TrigPoly::new(vec![0.0, 1.0], vec![0.0, 0.0])
    }

    pub fn sin() -> Self {
        TrigPoly::new(vec![0.0, 0.0], vec![0.0, 1.0])
    }

    pub fn degree(&self) -> usize {
        self.cos.len() - 1
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(k, (a, b))| {
                let (s, c) = (k as f64 * lambda).sin_cos();
                a * c + b * s
            })
            .sum()
    }

    pub fn norm1(&self) -> f64 {
        self.cos.iter().chain(&self.sin).map(|x| x.abs()).sum()
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        let n = self.cos.len().max(other.cos.len());
        let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
        TrigPoly::new(
            (0..n)
                .map(|k| get(&self.cos, k) + get(&other.cos, k))
                .collect(),
            (0..n)
                .map(|k| get(&self.sin, k) + get(&other.sin, k))
                .collect(),
        )
    }

    pub fn scale(&self, f: f64) -> TrigPoly {
        TrigPoly::new(
            self.cos.iter().map(|x| x * f).collect(),
            self.sin.iter().map(|x| x * f).collect(),
        )
    }

    pub fn mul(&self, other: &TrigPoly) -> TrigPoly {
        let n = self.degree() + other.degree() + 1;
        let mut cos = vec![0.0; n];
        let mut sin = vec![0.0; n];
        for m in 0..self.cos.len() {
            for k in 0..other.cos.len() {
                let (am, bm, ak, bk) = (self.cos[m], self.sin[m], other.cos[k], other.sin[k]);
                let sum = m + k;
                let diff = m.abs_diff(k);
                // sin((m − k)λ) flips sign when k > m
                let sgn = if m >= k { 1.0 } else { -1.0 };
                cos[sum] += 0.5 * (am * ak - bm * bk);
                cos[diff] += 0.5 * (am * ak + bm * bk);
                sin[sum] += 0.5 * (am * bk + bm * ak);
                sin[diff] += 0.5 * sgn * (bm * ak - am * bk);
            }
        }
        TrigPoly::new(cos, sin)
    }

    pub fn derivative(&self) -> TrigPoly {
        let n = self.cos.len();
        TrigPoly::new(
            (0..n).map(|k| k as f64 * self.sin[k]).collect(),
            (0..n).map(|k| -(k as f64) * self.cos[k]).collect(),
        )
    }

    /// `(p1, p2)` with `p(λ) = p1(cos λ) + p2(cos λ)·sin λ`, ascending powers.
    fn algebraic(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.cos.len();
        let mut t: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 1.0]];
        let mut u: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 2.0]];
        while t.len() <= n {
            let k = t.len();
            t.push(poly_sub(&poly_shift_scale(&t[k - 1], 2.0), &t[k - 2]));
            u.push(poly_sub(&poly_shift_scale(&u[k - 1], 2.0), &u[k - 2]));
        }
        let mut p1 = vec![0.0; n];
        let mut p2 = vec![0.0; n.max(1)];
        for k in 0..n {
            poly_axpy(&mut p1, self.cos[k], &t[k]);
            if k >= 1 {
                poly_axpy(&mut p2, self.sin[k], &u[k - 1]);
            }
        }
        (p1, p2)
    }

    /// Real roots in `[0, 2π)`, sorted. An identically vanishing polynomial
    /// reports no roots.
    pub fn roots(&self) -> Result<Vec<f64>, RootFailure> {
        let scale = self.norm1();
        if scale <= f64::MIN_POSITIVE {
            return Ok(Vec::new());
        }
        let (p1, p2) = self.algebraic();
        let one_minus_c2 = [1.0, 0.0, -1.0];
        let q = poly_sub(
            &poly_mul(&p1, &p1),
            &poly_mul(&poly_mul(&p2, &p2), &one_minus_c2),
        );
        let tol = tolerances::ROOT_RESIDUAL * scale.max(1.0);

        let mut found: Vec<f64> = Vec::new();
        for c in real_poly_roots(&q).ok_or(RootFailure)? {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for sign in [1.0, -1.0] {
                let lambda = self.polish(f64::atan2(sign * s, c));
                if self.eval(lambda).abs() <= tol {
                    found.push(lambda.rem_euclid(TAU));
                }
            }
        }
        found.sort_by(f64::total_cmp);
        found.dedup_by(|x, y| (*x - *y).abs() < 1e-10);
        if found.len() >= 2 && TAU - found[found.len() - 1] + found[0] < 1e-10 {
            found.pop();
        }
        self.check_sign_changes(&found)?;
        Ok(found)
    }

    fn polish(&self, mut lambda: f64) -> f64 {
        let d = self.derivative();
        for _ in 0..4 {
            let (v, dv) = (self.eval(lambda), d.eval(lambda));
            if dv.abs() <= f64::EPSILON * self.norm1() {
                break;
            }
            let next = lambda - v / dv;
            if self.eval(next).abs() >= v.abs() {
                break;
            }
            lambda = next;
        }
        lambda
    }

    /// Every sign change on a coarse grid must be matched by a found root.
    fn check_sign_changes(&self, roots: &[f64]) -> Result<(), RootFailure> {
        const SAMPLES: usize = 64;
        let step = TAU / SAMPLES as f64;
        let mut prev = self.eval(0.0);
        for i in 1..=SAMPLES {
            let hi = i as f64 * step;
            let cur = self.eval(hi);
            if prev * cur < 0.0 {
                let lo = hi - step;
                let covered = roots
                    .iter()
                    .any(|&r| (r >= lo - 1e-9 && r <= hi + 1e-9) || (i == SAMPLES && r < 1e-9));
                if !covered {
                    return Err(RootFailure);
                }
            }
            prev = cur;
        }
        Ok(())
    }
}

fn poly_shift_scale(p: &[f64], f: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend(p.iter().map(|x| x * f));
    out
}

fn poly_sub(p: &[f64], q: &[f64]) -> Vec<f64> {
    let n = p.len().max(q.len());
    (0..n)
        .map(|k| p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0))
        .collect()
}

fn poly_axpy(acc: &mut Vec<f64>, f: f64, p: &[f64]) {
    if acc.len() < p.len() {
        acc.resize(p.len(), 0.0);
    }
    for (a, x) in acc.iter_mut().zip(p) {
        *a += f * x;
    }
}

fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Real roots in `[-1, 1]` of a polynomial with ascending coefficients, from
/// companion-matrix eigenvalues. `None` if the eigenvalue iteration fails.
fn real_poly_roots(p: &[f64]) -> Option<Vec<f64>> {
    let max = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return Some(Vec::new());
    }
    let mut deg = p.len() - 1;
    while deg > 0 && p[deg].abs() <= 1e-13 * max {
        deg -= 1;
    }
    if deg == 0 {
        return Some(Vec::new());
    }
    let lead = p[deg];
    let companion = DMatrix::from_fn(deg, deg, |r, c| {
        if c == deg - 1 {
            -p[r] / lead
        } else if r == c + 1 {
            1.0
        } else {
            0.0
        }
    });
    let schur = Schur::try_new(companion, f64::EPSILON, 10_000)?;
    let roots = schur
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= tolerances::ROOT_IMAG * z.norm().max(1.0))
        .filter(|z| z.re.abs() <= 1.0 + tolerances::ROOT_IMAG)
        .map(|z| z.re.clamp(-1.0, 1.0))
        .collect();
    Some(roots)
}
