use std::f64::consts::FRAC_PI_2;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use subpoisson::oracle::Oracle;
use subpoisson::sweep::{run_sweep_with, SweepConfig};
use subpoisson::{Execution, StateSpec};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn closed_form_sweep(c: &mut Criterion) {
    let grid: Vec<f64> = (0..2000).map(|i| 0.41 + i as f64 * 0.01).collect();
    let cfg = SweepConfig::squeezed(
        0.4,
        FRAC_PI_2,
        grid,
        vec![0.0, 0.1, 0.5, 0.7],
        vec![0.0, 0.1, 0.3, 0.5],
    );
    let mut group = c.benchmark_group("closed_form_sweep");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_sweep_with(black_box(&cfg), exec).unwrap())
        });
    }
    group.finish();
}

fn oracle_batch(c: &mut Criterion) {
    let jobs: Vec<(StateSpec, f64, f64)> = [
        StateSpec::squeezed(0.4, FRAC_PI_2, 1.0),
        StateSpec::odd_cat(1.0),
        StateSpec::fock(2),
    ]
    .into_iter()
    .flat_map(|s| [(s, 0.1, 0.25), (s, 0.5, 0.5), (s, 0.3, 0.75)])
    .collect();
    let mut group = c.benchmark_group("oracle_batch");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                let oracle = Oracle::default();
                exec.map(&jobs, |(spec, n_th, tau)| {
                    oracle.channel_report(spec, *n_th, *tau).unwrap().report.q_param
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, closed_form_sweep, oracle_batch);
criterion_main!(benches);
