//! Sequential against parallel execution of the main kernels.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use qdc_core::experiment::{run, ExperimentConfig, ExperimentKind};
use qdc_core::par::ExecMode;
use qdc_core::qstate::SubsystemSpec;
use qdc_core::spinmodel::{
    consensus_timeseries, ensemble_average, log_time_grid, reduced_dm_factorized, sample_couplings,
    FragmentAssignment, FragmentSampler, SpinModelParams, TimeSeriesSpec,
};

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn params(n: usize) -> SpinModelParams {
    SpinModelParams { n, delta_d: 1.0, delta_g: 0.01, seed: 1 }
}

fn spec(points: usize) -> TimeSeriesSpec {
    TimeSeriesSpec {
        times: log_time_grid(0.05, 500.0, points),
        fragments: vec![FragmentAssignment::contiguous(4)],
        mus: vec![0.0, std::f64::consts::FRAC_PI_4],
        delta_target: 0.1,
        sampler: FragmentSampler::Contiguous,
        quantum_cmi: false,
    }
}

fn energies_and_evolution(c: &mut Criterion) {
    let mut g = c.benchmark_group("evolve");
    g.sample_size(10);
    for n in [14, 18] {
        for (name, mode) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter_batched(
                    || sample_couplings(&params(n)).unwrap(),
                    |real| black_box(real.evolve(1.3, mode).unwrap()),
                    BatchSize::LargeInput,
                )
            });
        }
    }
    g.finish();
}

fn factorized_reduced_state(c: &mut Criterion) {
    let real = sample_couplings(&params(20)).unwrap();
    let keep = SubsystemSpec::block(0, 9);
    c.bench_function("reduced_dm_factorized/n20_k9", |b| {
        b.iter(|| black_box(reduced_dm_factorized(&real, 2.0, &keep).unwrap()))
    });
}

fn time_series(c: &mut Criterion) {
    let mut g = c.benchmark_group("timeseries_n12");
    g.sample_size(10);
    let real = Arc::new(sample_couplings(&params(12)).unwrap());
    let spec = spec(8);
    for (name, mode) in MODES {
        g.bench_function(name, |b| b.iter(|| black_box(consensus_timeseries(&real, &spec, mode).unwrap())));
    }
    g.finish();
}

fn ensemble(c: &mut Criterion) {
    let mut g = c.benchmark_group("ensemble_n10x4");
    g.sample_size(10);
    let spec = spec(8);
    for (name, mode) in MODES {
        g.bench_function(name, |b| b.iter(|| black_box(ensemble_average(&params(10), 4, &spec, mode).unwrap())));
    }
    g.finish();
}

fn theorem_suite(c: &mut Criterion) {
    let mut g = c.benchmark_group("theorem2_stress_50");
    g.sample_size(10);
    let mut cfg = ExperimentConfig::new(ExperimentKind::Theorem2Stress);
    cfg.params = serde_json::json!({"instances": 50});
    for (name, mode) in MODES {
        g.bench_function(name, |b| b.iter(|| black_box(run(&cfg, mode).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, energies_and_evolution, factorized_reduced_state, time_series, ensemble, theorem_suite);
criterion_main!(benches);
