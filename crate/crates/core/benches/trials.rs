use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nrsim::linksim::{run_sim, Scenario, SimConfig};
use nrsim::par::Executor;

fn config(scenario: Scenario, executor: Executor) -> SimConfig {
    SimConfig {
        scenarios: vec![scenario],
        snr_db: vec![1.0],
        trials: 32,
        report_timing: false,
        executor,
        ..SimConfig::default()
    }
}

fn trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    for scenario in [Scenario::Pdsch, Scenario::Prach] {
        for executor in [Executor::Sequential, Executor::Parallel] {
            let cfg = config(scenario, executor);
            group.bench_with_input(
                BenchmarkId::new(scenario.name(), format!("{executor:?}").to_lowercase()),
                &cfg,
                |b, cfg| b.iter(|| run_sim(black_box(cfg)).unwrap()),
            );
        }
    }
    group.finish();
}

criterion_group!(benches, trials);
criterion_main!(benches);
