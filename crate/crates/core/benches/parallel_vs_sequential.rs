use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rpe_lab::exec::Execution;
use rpe_lab::hamiltonians::random_hamiltonian;
use rpe_lab::robustness::{
    brute_force_delta_lambda, success_region, Amplitudes, BoundForm, GridSpec,
};
use rpe_lab::rpe::{auto_tau, scaling_study, Experiment, Mode, RpeConfig};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("success_region_61");
    let spec = GridSpec {
        n: 61,
        max_eps: 0.5,
        form: BoundForm::Corrected,
    };
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| success_region(&spec, exec).unwrap())
        });
    }
    group.finish();
}

fn brute_force(c: &mut Criterion) {
    let mut group = c.benchmark_group("brute_force_16");
    group.sample_size(10);
    let amps = Amplitudes {
        eps_c: 0.2,
        eps_l: 0.15,
        eps_c_prime: 0.1,
        eps_l_prime: 0.25,
    };
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| brute_force_delta_lambda(&amps, 16, exec).unwrap())
        });
    }
    group.finish();
}

fn scaling_trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("scaling_study_200x10");
    let h = random_hamiltonian(&mut ChaCha8Rng::seed_from_u64(7), 2, 6);
    let tau = auto_tau(&h.spectrum().unwrap().eigenvalues);
    let exp = Experiment::new(&h, 0, 3, tau).unwrap();
    let cfg = RpeConfig {
        a: 0,
        b: 3,
        generations: 10,
        mode: Mode::Sampled {
            shots: 1024,
            seed: 1,
        },
        tau,
    };
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| scaling_study(&exp, &cfg, 200, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, grid, brute_force, scaling_trials);
criterion_main!(benches);
