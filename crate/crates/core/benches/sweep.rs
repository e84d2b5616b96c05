use criterion::{criterion_group, criterion_main, Criterion};

use wkbsplit::exec::Execution;
use wkbsplit::harness::config::Representation;
use wkbsplit::harness::{presets, run_sweep, ScenarioConfig};

fn config() -> ScenarioConfig {
    let mut cfg = presets::smoothed1d();
    cfg.grid.n = vec![256];
    cfg.eps = vec![0.5, 0.1];
    cfg.steps = vec![10, 20, 40, 80];
    cfg.representation = Representation::Wkb;
    cfg
}

fn sweep(c: &mut Criterion) {
    let cfg = config();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| run_sweep(&cfg, Execution::Sequential).unwrap())
    });
    group.bench_function("parallel", |b| b.iter(|| run_sweep(&cfg, Execution::Parallel).unwrap()));
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
