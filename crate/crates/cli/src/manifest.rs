use std::fs;
use std::path::{Path, PathBuf};

use rpe_lab::robustness::BoundForm;
use rpe_lab::rpe::{Mode, Unwrap};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Fully resolved parameters of one command. Executing the same invocation
/// twice produces identical output bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Invocation {
    Spectrum {
        hamiltonian: PathBuf,
    },
    Rpe {
        hamiltonian: PathBuf,
        a: usize,
        b: usize,
        generations: u32,
        mode: Mode,
        tau: f64,
        unwrap: Unwrap,
        out: PathBuf,
    },
    Scaling {
        hamiltonian: PathBuf,
        a: usize,
        b: usize,
        generations: u32,
        trials: usize,
        mode: Mode,
        tau: f64,
        out: PathBuf,
    },
    Robustness {
        grid: usize,
        max_eps: f64,
        form: BoundForm,
        out: PathBuf,
    },
    Prep {
        hamiltonian: PathBuf,
        a: usize,
        b: usize,
        beta: f64,
        out: Option<PathBuf>,
    },
    Cost {
        singles: u64,
        cnots: u64,
    },
}

impl Invocation {
    pub fn name(&self) -> &'static str {
        match self {
            Invocation::Spectrum { .. } => "spectrum",
            Invocation::Rpe { .. } => "rpe",
            Invocation::Scaling { .. } => "scaling",
            Invocation::Robustness { .. } => "robustness",
            Invocation::Prep { .. } => "prep",
            Invocation::Cost { .. } => "cost",
        }
    }

    pub fn inputs(&self) -> Vec<PathBuf> {
        match self {
            Invocation::Spectrum { hamiltonian }
            | Invocation::Rpe { hamiltonian, .. }
            | Invocation::Scaling { hamiltonian, .. }
            | Invocation::Prep { hamiltonian, .. } => vec![hamiltonian.clone()],
            Invocation::Robustness { .. } | Invocation::Cost { .. } => Vec::new(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Invocation::Rpe {
                mode: Mode::Sampled { seed, .. },
                ..
            }
            | Invocation::Scaling {
                mode: Mode::Sampled { seed, .. },
                ..
            } => Some(*seed),
            _ => None,
        }
    }

    /// Moves every output file into `dir`, keeping file names.
    pub fn rebase_outputs(&mut self, dir: &Path) {
        let rebase = |p: &mut PathBuf| {
            if let Some(name) = p.file_name() {
                *p = dir.join(name);
            }
        };
        match self {
            Invocation::Rpe { out, .. }
            | Invocation::Scaling { out, .. }
            | Invocation::Robustness { out, .. } => rebase(out),
            Invocation::Prep { out: Some(out), .. } => rebase(out),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub parameters: Invocation,
    pub version: String,
}

impl RunManifest {
    pub fn new(invocation: &Invocation) -> Self {
        RunManifest {
            command: invocation.name().to_string(),
            inputs: invocation.inputs(),
            seed: invocation.seed(),
            parameters: invocation.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}
