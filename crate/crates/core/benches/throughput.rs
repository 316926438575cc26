//! Sequential versus rayon execution of trial-level work.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use implicit_sparse::dynamics::{run_suite, SuiteConfig};
use implicit_sparse::experiments::{run_sweep, ExperimentConfig, Family, Preset, Sweep};
use implicit_sparse::par::Execution;

fn small_sweep() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(Preset::Desk, Family::PhaseTransitionGamma);
    cfg.n = 100;
    cfg.d = 400;
    cfg.k = 4;
    cfg.repetitions = 4;
    cfg.iterations = 500;
    cfg.lasso.path_count = 40;
    if let Some(Sweep { values, .. }) = cfg.sweep.as_mut() {
        values.truncate(2);
    }
    cfg
}

fn bench_sweep(c: &mut Criterion) {
    let cfg = small_sweep();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| black_box(run_sweep(&cfg, exec).unwrap()))
        });
    }
    group.finish();
}

fn bench_lemmas(c: &mut Criterion) {
    let mut group = c.benchmark_group("lemma-suite");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let cfg = SuiteConfig {
            cases: 200,
            exec,
            ..SuiteConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &cfg, |b, cfg| {
            b.iter(|| black_box(run_suite(cfg)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sweep, bench_lemmas);
criterion_main!(benches);
