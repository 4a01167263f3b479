//! Pauli-term Hamiltonians.
//!
//! Text format, one item per line:
//!
//! ```text
//! # comment
//! label H2 at 0.74 A
//! II  -0.81054
//! ZI   0.17218
//! ```
//!
//! Qubit 0 is the least-significant bit of a computational-basis index, and
//! the leftmost character of a word acts on qubit `n − 1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{eig_hermitian, ComplexMatrix, NumericsError, Spectrum};
use crate::tolerances::MAX_QUBITS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: word has {found} qubits, expected {expected}")]
    InconsistentWordLength {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("no Pauli terms in input")]
    EmptyInput,
    #[error("{0} qubits exceeds the dense limit of {MAX_QUBITS}")]
    DimensionTooLarge(usize),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product of single-qubit Paulis, stored in text order
/// (index 0 acts on the highest qubit).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PauliWord(Vec<Pauli>);

impl PauliWord {
    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// Operator acting on `qubit`.
    pub fn on_qubit(&self, qubit: usize) -> Pauli {
        self.0[self.0.len() - 1 - qubit]
    }

    /// Action on a basis state: `P|col⟩ = phase·|col ^ flip_mask⟩`.
    fn action(&self, col: usize) -> (usize, Complex64) {
        let mut row = col;
        let mut phase = Complex64::new(1.0, 0.0);
        for q in 0..self.n_qubits() {
            let bit = (col >> q) & 1;
            match self.on_qubit(q) {
                Pauli::I => {}
                Pauli::X => row ^= 1 << q,
                Pauli::Y => {
                    row ^= 1 << q;
                    // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
                    phase *= if bit == 0 {
                        Complex64::i()
                    } else {
                        -Complex64::i()
                    };
                }
                Pauli::Z => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
            }
        }
        (row, phase)
    }
}

impl From<Vec<Pauli>> for PauliWord {
    fn from(letters: Vec<Pauli>) -> Self {
        PauliWord(letters)
    }
}

impl FromStr for PauliWord {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err("empty Pauli word".into());
        }
        s.chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| format!("invalid Pauli character {c:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(PauliWord)
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub word: PauliWord,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliHamiltonian {
    n_qubits: usize,
    /// Sorted by word, no duplicates.
    terms: Vec<PauliTerm>,
    pub label: String,
}

impl PauliHamiltonian {
    /// Merges duplicate words by summing coefficients.
    pub fn new(
        terms: impl IntoIterator<Item = PauliTerm>,
        label: impl Into<String>,
    ) -> Result<Self, HamiltonianError> {
        let mut merged: BTreeMap<PauliWord, f64> = BTreeMap::new();
        let mut n_qubits = None;
        for (i, term) in terms.into_iter().enumerate() {
            let n = term.word.n_qubits();
            match n_qubits {
                None => n_qubits = Some(n),
                Some(expected) if expected != n => {
                    return Err(HamiltonianError::InconsistentWordLength {
                        line: i + 1,
                        expected,
                        found: n,
                    });
                }
                _ => {}
            }
            if !term.coefficient.is_finite() {
                return Err(HamiltonianError::MalformedLine {
                    line: i + 1,
                    reason: "non-finite coefficient".into(),
                });
            }
            *merged.entry(term.word).or_insert(0.0) += term.coefficient;
        }
        let n_qubits = n_qubits.ok_or(HamiltonianError::EmptyInput)?;
        Ok(PauliHamiltonian {
            n_qubits,
            terms: merged
                .into_iter()
                .map(|(word, coefficient)| PauliTerm { word, coefficient })
                .collect(),
            label: label.into(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// Dense matrix in the computational basis.
    pub fn to_dense(&self) -> Result<ComplexMatrix, HamiltonianError> {
        if self.n_qubits > MAX_QUBITS {
            return Err(HamiltonianError::DimensionTooLarge(self.n_qubits));
        }
        let dim = self.dim();
        let mut m = ComplexMatrix::zeros(dim);
        for term in &self.terms {
            for col in 0..dim {
                let (row, phase) = term.word.action(col);
                let v = m.get(row, col) + phase * term.coefficient;
                m.set(row, col, v);
            }
        }
        Ok(m)
    }

    /// `Tr H = 2^n × (coefficient of the identity word)`.
    pub fn trace(&self) -> f64 {
        self.terms
            .iter()
            .find(|t| t.word.is_identity())
            .map_or(0.0, |t| t.coefficient * self.dim() as f64)
    }

    pub fn spectrum(&self) -> Result<Spectrum, HamiltonianError> {
        Ok(eig_hermitian(&self.to_dense()?)?)
    }

    /// Text form: optional label header, then terms sorted by word with
    /// 17 significant digits.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        if !self.label.is_empty() {
            out.push_str(&format!("label {}\n", self.label));
        }
        for t in &self.terms {
            out.push_str(&format!("{} {:.16e}\n", t.word, t.coefficient));
        }
        out
    }
}

/// Parses the Hamiltonian text format.
/// Random Hamiltonian with `n_terms` words drawn uniformly from `{I,X,Y,Z}^n`
/// and coefficients uniform in `[-1, 1)`.
pub fn random_hamiltonian(rng: &mut impl Rng, n_qubits: usize, n_terms: usize) -> PauliHamiltonian {
    const LETTERS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let terms: Vec<PauliTerm> = (0..n_terms.max(1))
        .map(|_| PauliTerm {
            word: PauliWord(
                (0..n_qubits)
                    .map(|_| LETTERS[rng.random_range(0..4)])
                    .collect(),
            ),
            coefficient: rng.random_range(-1.0..1.0),
        })
        .collect();
    PauliHamiltonian::new(terms, "random").expect("uniform word length")
}

pub fn parse_hamiltonian(text: &str) -> Result<PauliHamiltonian, HamiltonianError> {
    let mut label = String::new();
    let mut terms = Vec::new();
    let mut n_qubits: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("label") {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                label = rest.trim().to_string();
                continue;
            }
        }
        let mut fields = line.split_whitespace();
        let (Some(word), Some(coeff), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(HamiltonianError::MalformedLine {
                line: line_no,
                reason: "expected `<PauliWord> <coefficient>`".into(),
            });
        };
        let word: PauliWord = word
            .parse()
            .map_err(|reason| HamiltonianError::MalformedLine {
                line: line_no,
                reason,
            })?;
        let coefficient: f64 = coeff.parse().map_err(|_| HamiltonianError::MalformedLine {
            line: line_no,
            reason: format!("coefficient {coeff:?} is not a real decimal number"),
        })?;
        if !coefficient.is_finite() {
            return Err(HamiltonianError::MalformedLine {
                line: line_no,
                reason: "non-finite coefficient".into(),
            });
        }
        match n_qubits {
            None => n_qubits = Some(word.n_qubits()),
            Some(expected) if expected != word.n_qubits() => {
                return Err(HamiltonianError::InconsistentWordLength {
                    line: line_no,
                    expected,
                    found: word.n_qubits(),
                });
            }
            _ => {}
        }
        terms.push(PauliTerm { word, coefficient });
    }
    PauliHamiltonian::new(terms, label)
}
