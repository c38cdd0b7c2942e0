use criterion::{criterion_group, criterion_main, Criterion};
use idl_core::harness::{run_grid, Execution, SweepGrid, TrialConfig};

fn grid() -> SweepGrid {
    SweepGrid {
        base: TrialConfig {
            n_steps: 300,
            ..TrialConfig::default()
        },
        etas: vec![1e-3, 1e-2],
        seeds: (0..4).collect(),
    }
}

fn sweep(c: &mut Criterion) {
    let grid = grid();
    let mut group = c.benchmark_group("sweep_2x4x300");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| run_grid(&grid, Execution::Sequential).unwrap())
    });
    group.bench_function("parallel", |b| {
        b.iter(|| run_grid(&grid, Execution::Parallel).unwrap())
    });
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
