//! Gate-level circuits, eigenstate-superposition preparation and a
//! statevector simulator.
//!
//! The preparation unitary is `U_p(β) = A·B(a, b, β)`: `B` writes
//! `(|a⟩ + e^{iβ}|b⟩)/√2` into the computational basis and `A` rotates basis
//! states onto energy eigenstates.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::{self, Write as _};

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::{ComplexMatrix, Spectrum, StateVector};
use crate::tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("basis indices must differ (got a = b = {0})")]
    EqualIndices(usize),
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("qubit {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("CNOT control and target are both qubit {0}")]
    ControlEqualsTarget(usize),
    #[error("dense gate is not unitary (max |U†U − I| = {defect:.3e})")]
    NonUnitary { defect: f64 },
    #[error("dense gate of dimension {dim} does not act on {n} qubits")]
    DenseSizeMismatch { dim: usize, n: usize },
    #[error("dense gate lists qubit {0} twice")]
    RepeatedQubit(usize),
    #[error("state dimension {found} does not match a {n_qubits}-qubit circuit")]
    DimensionMismatch { n_qubits: usize, found: usize },
    #[error("circuit text line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    X(usize),
    H(usize),
    /// `diag(1, e^{i·angle})` on one qubit.
    Phase {
        qubit: usize,
        angle: f64,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    /// Bit `k` of the matrix index addresses `qubits[k]`.
    Dense {
        matrix: ComplexMatrix,
        qubits: Vec<usize>,
    },
}

impl Gate {
    fn validate(&self, n_qubits: usize) -> Result<(), CircuitError> {
        let check = |q: usize| {
            if q < n_qubits {
                Ok(())
            } else {
                Err(CircuitError::QubitOutOfRange { qubit: q, n_qubits })
            }
        };
        match self {
            Gate::X(q) | Gate::H(q) | Gate::Phase { qubit: q, .. } => check(*q),
            Gate::Cnot { control, target } => {
                check(*control)?;
                check(*target)?;
                if control == target {
                    return Err(CircuitError::ControlEqualsTarget(*control));
                }
                Ok(())
            }
            Gate::Dense { matrix, qubits } => {
                for (i, &q) in qubits.iter().enumerate() {
                    check(q)?;
                    if qubits[..i].contains(&q) {
                        return Err(CircuitError::RepeatedQubit(q));
                    }
                }
                if matrix.dim() != 1 << qubits.len() {
                    return Err(CircuitError::DenseSizeMismatch {
                        dim: matrix.dim(),
                        n: qubits.len(),
                    });
                }
                let defect = matrix.unitarity_defect();
                if defect > tolerances::UNITARY {
                    return Err(CircuitError::NonUnitary { defect });
                }
                Ok(())
            }
        }
    }

    fn inverse(&self) -> Gate {
        match self {
            Gate::Phase { qubit, angle } => Gate::Phase {
                qubit: *qubit,
                angle: -angle,
            },
            Gate::Dense { matrix, qubits } => Gate::Dense {
                matrix: matrix.adjoint(),
                qubits: qubits.clone(),
            },
            g => g.clone(),
        }
    }

    fn apply(&self, amps: &mut [Complex64]) {
        match self {
            Gate::X(q) => {
                let m = 1 << q;
                for i in 0..amps.len() {
                    if i & m == 0 {
                        amps.swap(i, i | m);
                    }
                }
            }
            Gate::H(q) => {
                let m = 1 << q;
                for i in 0..amps.len() {
                    if i & m == 0 {
                        let (a0, a1) = (amps[i], amps[i | m]);
                        amps[i] = (a0 + a1) * FRAC_1_SQRT_2;
                        amps[i | m] = (a0 - a1) * FRAC_1_SQRT_2;
                    }
                }
            }
            Gate::Phase { qubit, angle } => {
                let m = 1 << qubit;
                let phase = Complex64::from_polar(1.0, *angle);
                for (i, a) in amps.iter_mut().enumerate() {
                    if i & m != 0 {
                        *a *= phase;
                    }
                }
            }
            Gate::Cnot { control, target } => {
                let (mc, mt) = (1 << control, 1 << target);
                for i in 0..amps.len() {
                    if i & mc != 0 && i & mt == 0 {
                        amps.swap(i, i | mt);
                    }
                }
            }
            Gate::Dense { matrix, qubits } => apply_dense(matrix, qubits, amps),
        }
    }

    fn as_bit_flip(&self) -> Option<Gate> {
        match self {
            Gate::Dense { matrix, qubits } if qubits.len() == 1 => {
                let x =
                    ComplexMatrix::from_fn(2, |r, c| Complex64::new((r != c) as u8 as f64, 0.0));
                (matrix.sub(&x).max_abs() <= tolerances::GATE_IDENTITY)
                    .then_some(Gate::X(qubits[0]))
            }
            _ => None,
        }
    }

    fn is_trivial(&self) -> bool {
        match self {
            Gate::Phase { angle, .. } => {
                let wrapped = angle.rem_euclid(std::f64::consts::TAU);
                wrapped.min(std::f64::consts::TAU - wrapped) <= tolerances::GATE_IDENTITY
            }
            Gate::Dense { matrix, .. } => {
                matrix.sub(&ComplexMatrix::identity(matrix.dim())).max_abs()
                    <= tolerances::GATE_IDENTITY
            }
            _ => false,
        }
    }
}

fn apply_dense(matrix: &ComplexMatrix, qubits: &[usize], amps: &mut [Complex64]) {
    let k = qubits.len();
    let sub = 1usize << k;
    let mask: usize = qubits.iter().map(|&q| 1 << q).sum();
    let offsets: Vec<usize> = (0..sub)
        .map(|s| {
            (0..k)
                .filter(|&b| s >> b & 1 == 1)
                .map(|b| 1 << qubits[b])
                .sum()
        })
        .collect();
    let entries = matrix.row_major();
    let mut gathered = vec![Complex64::new(0.0, 0.0); sub];
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        for (s, g) in gathered.iter_mut().enumerate() {
            *g = amps[base | offsets[s]];
        }
        for r in 0..sub {
            let row = &entries[r * sub..(r + 1) * sub];
            amps[base | offsets[r]] = row.iter().zip(&gathered).map(|(m, v)| m * v).sum();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Appends every gate of `other`.
    pub fn extend(&mut self, other: &Circuit) -> Result<(), CircuitError> {
        for g in &other.gates {
            self.push(g.clone())?;
        }
        Ok(())
    }

    /// Adjoint circuit: gates reversed and individually inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    /// Drops zero-angle phase gates and identity dense blocks, and writes
    /// one-qubit dense bit flips as `X`.
    pub fn simplified(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self
                .gates
                .iter()
                .filter(|g| !g.is_trivial())
                .map(|g| g.as_bit_flip().unwrap_or_else(|| g.clone()))
                .collect(),
        }
    }

    /// Text form: header `qubits n`, then one gate per line.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(text: &str) -> Result<Circuit, CircuitError> {
        parse_circuit(text)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n_qubits)?;
        for g in &self.gates {
            match g {
                Gate::X(q) => writeln!(f, "X {q}")?,
                Gate::H(q) => writeln!(f, "H {q}")?,
                Gate::Phase { qubit, angle } => writeln!(f, "PHASE {qubit} {angle:.16e}")?,
                Gate::Cnot { control, target } => writeln!(f, "CNOT {control} {target}")?,
                Gate::Dense { matrix, qubits } => {
                    let qs: Vec<String> = qubits.iter().map(|q| q.to_string()).collect();
                    let mut line = format!("DENSE [{}]", qs.join(" "));
                    for z in matrix.row_major() {
                        let _ = write!(line, " {:.16e}{:+.16e}i", clean(z.re), clean(z.im));
                    }
                    writeln!(f, "{line}")?;
                }
            }
        }
        Ok(())
    }
}

fn clean(x: f64) -> f64 {
    if x.abs() <= tolerances::GATE_IDENTITY {
        0.0
    } else {
        x
    }
}

fn parse_complex(token: &str) -> Option<Complex64> {
    let body = token.strip_suffix('i')?;
    // split at the sign that starts the imaginary part (not an exponent sign)
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&i| {
        (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E')
    })?;
    let re = body[..split].parse().ok()?;
    let im = body[split..].parse().ok()?;
    Some(Complex64::new(re, im))
}

fn parse_circuit(text: &str) -> Result<Circuit, CircuitError> {
    let err = |line: usize, reason: &str| CircuitError::Parse {
        line,
        reason: reason.to_string(),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "missing `qubits n` header"))?;
    let n_qubits: usize = header
        .trim()
        .strip_prefix("qubits")
        .and_then(|r| r.trim().parse().ok())
        .ok_or_else(|| err(1, "missing `qubits n` header"))?;
    let mut circuit = Circuit::new(n_qubits);
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim();
        let (op, rest) = line.split_once(' ').unwrap_or((line, ""));
        let ints = |s: &str| -> Result<Vec<usize>, CircuitError> {
            s.split_whitespace()
                .map(|t| t.parse().map_err(|_| err(line_no, "bad qubit index")))
                .collect()
        };
        let gate = match op {
            "X" | "H" => {
                let q = ints(rest)?;
                if q.len() != 1 {
                    return Err(err(line_no, "expected one qubit"));
                }
                if op == "X" {
                    Gate::X(q[0])
                } else {
                    Gate::H(q[0])
                }
            }
            "PHASE" => {
                let mut t = rest.split_whitespace();
                let qubit = t
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(line_no, "bad qubit"))?;
                let angle = t
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(line_no, "bad angle"))?;
                Gate::Phase { qubit, angle }
            }
            "CNOT" => {
                let q = ints(rest)?;
                if q.len() != 2 {
                    return Err(err(line_no, "expected control and target"));
                }
                Gate::Cnot {
                    control: q[0],
                    target: q[1],
                }
            }
            "DENSE" => {
                let open = rest
                    .find('[')
                    .ok_or_else(|| err(line_no, "missing qubit list"))?;
                let close = rest
                    .find(']')
                    .ok_or_else(|| err(line_no, "missing qubit list"))?;
                let qubits = ints(&rest[open + 1..close])?;
                let entries: Vec<Complex64> = rest[close + 1..]
                    .split_whitespace()
                    .map(|t| parse_complex(t).ok_or_else(|| err(line_no, "bad complex entry")))
                    .collect::<Result<_, _>>()?;
                let dim = 1 << qubits.len();
                let matrix = ComplexMatrix::from_row_major(dim, &entries)
                    .map_err(|e| err(line_no, &e.to_string()))?;
                Gate::Dense { matrix, qubits }
            }
            _ => return Err(err(line_no, "unknown gate")),
        };
        circuit.push(gate)?;
    }
    Ok(circuit)
}

/// Runs `circuit` on `initial`, gates left to right.
pub fn simulate(circuit: &Circuit, initial: &StateVector) -> Result<StateVector, CircuitError> {
    if initial.dim() != 1 << circuit.n_qubits {
        return Err(CircuitError::DimensionMismatch {
            n_qubits: circuit.n_qubits,
            found: initial.dim(),
        });
    }
    let mut state = initial.clone();
    for g in &circuit.gates {
        g.apply(state.amplitudes_mut());
    }
    Ok(state)
}

fn check_pair(a: usize, b: usize, n: usize) -> Result<(), CircuitError> {
    let dim = 1usize << n;
    for index in [a, b] {
        if index >= dim {
            return Err(CircuitError::IndexOutOfRange { index, dim });
        }
    }
    if a == b {
        return Err(CircuitError::EqualIndices(a));
    }
    Ok(())
}

/// X/CNOT circuit `T` with `T|0⟩ = |a⟩` and `T|2^j⟩ = |b⟩`, where `j` is the
/// lowest bit in which `a` and `b` differ. Returns `(T, j)`.
pub fn ab_select(a: usize, b: usize, n: usize) -> Result<(Circuit, usize), CircuitError> {
    check_pair(a, b, n)?;
    let mut t = Circuit::new(n);
    let mut control: Option<usize> = None;
    let mut flip = false;
    for i in 0..n {
        let (ai, bi) = ((a >> i) & 1 == 1, (b >> i) & 1 == 1);
        if ai == bi {
            if ai {
                t.push(Gate::X(i))?;
            }
        } else if let Some(j) = control {
            t.push(Gate::Cnot {
                control: j,
                target: i,
            })?;
            if ai {
                t.push(Gate::X(i))?;
            }
        } else {
            control = Some(i);
            // the control ends up as b_j on the |2^j⟩ branch only if b_j = 1
            flip = !bi;
        }
    }
    let j = control.expect("a != b guarantees a differing bit");
    if flip {
        t.push(Gate::X(j))?;
    }
    Ok((t, j))
}

/// `B(a, b, β)` with `B|0⟩ = (|a⟩ + e^{iβ}|b⟩)/√2`: H and PHASE on the
/// control qubit followed by [`ab_select`].
pub fn build_b(a: usize, b: usize, beta: f64, n: usize) -> Result<Circuit, CircuitError> {
    let (t, j) = ab_select(a, b, n)?;
    let mut c = Circuit::new(n);
    c.push(Gate::H(j))?;
    c.push(Gate::Phase {
        qubit: j,
        angle: beta,
    })?;
    c.extend(&t)?;
    Ok(c)
}

/// `A(H) = Σ_i |E_i⟩⟨i|` as a dense gate on the full register. Each column's
/// global phase is fixed so its largest-magnitude entry (lowest index on
/// ties) is real and positive.
pub fn build_a(spectrum: &Spectrum) -> Result<Gate, CircuitError> {
    let defect = spectrum.orthonormality_defect();
    if defect > tolerances::ORTHONORMAL {
        return Err(CircuitError::NonUnitary { defect });
    }
    let dim = spectrum.dim();
    let mut matrix = spectrum.eigenvectors.clone();
    for col in 0..dim {
        let column: Vec<Complex64> = (0..dim).map(|r| matrix.get(r, col)).collect();
        let max = column.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = column
            .iter()
            .position(|z| z.norm() >= max - tolerances::GATE_IDENTITY)
            .expect("non-empty column");
        let z = column[pivot];
        let phase = z.conj() / z.norm();
        for (r, v) in column.iter().enumerate() {
            matrix.set(r, col, v * phase);
        }
        matrix.set(pivot, col, Complex64::new(z.norm(), 0.0));
    }
    let n = dim.trailing_zeros() as usize;
    Ok(Gate::Dense {
        matrix,
        qubits: (0..n).collect(),
    })
}

/// Full preparation circuit `U_p(β) = A·B(a, b, β)` mapping `|0⟩` to
/// `(|E_a⟩ + e^{iβ}|E_b⟩)/√2`.
pub fn preparation_circuit(
    spectrum: &Spectrum,
    a: usize,
    b: usize,
    beta: f64,
) -> Result<Circuit, CircuitError> {
    let n = spectrum.dim().trailing_zeros() as usize;
    let mut c = build_b(a, b, beta, n)?;
    c.push(build_a(spectrum)?)?;
    Ok(c)
}

/// Worst-case CNOT count of the singly-controlled version of a circuit with
/// `singles` single-qubit gates and `cnots` CNOTs: `6t + 2s`.
pub fn controlled_cost(singles: u64, cnots: u64) -> u64 {
    6 * cnots + 2 * singles
}
