use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3};
use std::fs;
use std::path::{Path, PathBuf};

use rpe_lab::circuits::{build_a, preparation_circuit, simulate, Gate};
use rpe_lab::exec::Execution;
use rpe_lab::hamiltonians::{parse_hamiltonian, PauliHamiltonian};
use rpe_lab::numerics::StateVector;
use rpe_lab::robustness::{contour_to_csv, success_region, Axis, BoundForm, GridSpec};
use rpe_lab::rpe::{auto_tau, run_experiment, scaling_study, Experiment, Mode, RpeConfig, Unwrap};
use rpe_lab::Complex64;

use crate::manifest::Invocation;
use crate::CliError;

const PREP_TOLERANCE: f64 = 1e-9;

fn load(path: &Path) -> Result<PauliHamiltonian, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_hamiltonian(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn sibling(path: &Path, extension: &str) -> PathBuf {
    path.with_extension(extension)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), |v| format!("{v:.16e}"))
}

pub fn resolve_tau(hamiltonian: &Path, tau: &str) -> Result<f64, CliError> {
    if tau.trim().eq_ignore_ascii_case("auto") {
        let spectrum = load(hamiltonian)?.spectrum().map_err(input)?;
        return Ok(auto_tau(&spectrum.eigenvalues));
    }
    tau.trim()
        .parse::<f64>()
        .ok()
        .filter(|t| t.is_finite() && *t > 0.0)
        .ok_or_else(|| {
            CliError::Input(format!(
                "tau must be `auto` or a positive number, got `{tau}`"
            ))
        })
}

pub fn execute(invocation: &Invocation) -> Result<(), CliError> {
    match invocation {
        Invocation::Spectrum { hamiltonian } => spectrum(hamiltonian),
        Invocation::Rpe {
            hamiltonian,
            a,
            b,
            generations,
            mode,
            tau,
            unwrap,
            out,
        } => {
            let config = RpeConfig {
                a: *a,
                b: *b,
                generations: *generations,
                mode: *mode,
                tau: *tau,
            };
            rpe(hamiltonian, &config, *unwrap, out)
        }
        Invocation::Scaling {
            hamiltonian,
            a,
            b,
            generations,
            trials,
            mode,
            tau,
            out,
        } => {
            let config = RpeConfig {
                a: *a,
                b: *b,
                generations: *generations,
                mode: *mode,
                tau: *tau,
            };
            scaling(hamiltonian, &config, *trials, out)
        }
        Invocation::Robustness {
            grid,
            max_eps,
            form,
            out,
        } => robustness(*grid, *max_eps, *form, out),
        Invocation::Prep {
            hamiltonian,
            a,
            b,
            beta,
            out,
        } => prep(hamiltonian, *a, *b, *beta, out.as_deref()),
        Invocation::Cost { singles, cnots } => {
            cost(*singles, *cnots);
            Ok(())
        }
    }
}

fn spectrum(path: &Path) -> Result<(), CliError> {
    let h = load(path)?;
    let s = h.spectrum().map_err(input)?;
    println!("index,eigenvalue");
    for (i, e) in s.eigenvalues.iter().enumerate() {
        println!("{i},{e:.16e}");
    }
    println!("trace,{:.16e}", h.trace());
    Ok(())
}

fn experiment(path: &Path, config: &RpeConfig) -> Result<Experiment, CliError> {
    let h = load(path)?;
    config.validate(h.dim()).map_err(input)?;
    Experiment::new(&h, config.a, config.b, config.tau).map_err(input)
}

fn rpe(path: &Path, config: &RpeConfig, unwrap: Unwrap, out: &Path) -> Result<(), CliError> {
    let exp = experiment(path, config)?;
    let result = run_experiment(&exp, config).map_err(input)?;
    write(out, &(result.to_json() + "\n"))?;
    write(&sibling(out, "csv"), &result.to_csv())?;
    println!("theta_final,{:.16e}", result.theta_final);
    println!(
        "energy_difference,{:.16e}",
        result.energy_difference(unwrap)
    );
    println!("true_energy_difference,{:.16e}", exp.true_difference());
    if config.mode == Mode::Exact && result.any_degenerate() {
        return Err(CliError::SelfCheck(
            "degenerate phase reading in exact mode".into(),
        ));
    }
    Ok(())
}

fn scaling(path: &Path, config: &RpeConfig, trials: usize, out: &Path) -> Result<(), CliError> {
    let exp = experiment(path, config)?;
    let study = scaling_study(&exp, config, trials, Execution::Parallel).map_err(input)?;
    write(out, &study.to_csv())?;
    for (g, m) in study.medians.iter().enumerate() {
        println!("median,{g},{m:.16e}");
    }
    match study.slope {
        Some(s) => println!("slope,{s:.16e}"),
        None if config.mode == Mode::Exact => println!("slope,exact"),
        None => println!("slope,undefined"),
    }
    Ok(())
}

fn robustness(grid: usize, max_eps: f64, form: BoundForm, out: &Path) -> Result<(), CliError> {
    let spec = GridSpec {
        n: grid,
        max_eps,
        form,
    };
    let map = success_region(&spec, Execution::Parallel).map_err(input)?;
    write(out, &map.to_csv())?;
    write(
        &sibling(out, "contour.csv"),
        &contour_to_csv(&map.contour(FRAC_PI_3)),
    )?;
    let report = map.monotonicity();
    println!(
        "leakage_crossing,{}",
        fmt_opt(map.axis_crossing(Axis::Leakage, FRAC_PI_3))
    );
    println!(
        "coherent_crossing,{}",
        fmt_opt(map.axis_crossing(Axis::Coherent, FRAC_PI_3))
    );
    println!(
        "monotonicity_decreases,{},{},{:.16e}",
        report.decreases_along_eps_c, report.decreases_along_eps_l, report.largest_decrease
    );
    println!("fallback_cells,{}", map.fallback_cells);
    Ok(())
}

fn prep(path: &Path, a: usize, b: usize, beta: f64, out: Option<&Path>) -> Result<(), CliError> {
    let h = load(path)?;
    let spectrum = h.spectrum().map_err(input)?;
    let circuit = preparation_circuit(&spectrum, a, b, beta).map_err(input)?;
    let Gate::Dense { matrix, .. } = build_a(&spectrum).map_err(input)? else {
        unreachable!("the eigenbasis change is a dense gate")
    };
    let target = matrix
        .column(a)
        .add(&matrix.column(b).scale(Complex64::from_polar(1.0, beta)))
        .scale(Complex64::new(FRAC_1_SQRT_2, 0.0));
    let simplified = circuit.simplified();
    let produced = simulate(&simplified, &StateVector::zero_state(h.n_qubits())).map_err(input)?;
    let defect = produced.max_abs_diff(&target);
    if defect.is_nan() || defect > PREP_TOLERANCE {
        return Err(CliError::SelfCheck(format!(
            "prepared state differs from target by {defect:.3e}"
        )));
    }
    let text = simplified.to_text();
    if let Some(out) = out {
        write(out, &text)?;
    }
    print!("{text}");
    Ok(())
}

fn cost(singles: u64, cnots: u64) {
    println!("uncontrolled_cnots,{cnots}");
    println!(
        "controlled_cnots_worst_case,{}",
        rpe_lab::circuits::controlled_cost(singles, cnots)
    );
}
