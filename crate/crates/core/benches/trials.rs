use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kwik_core::harness::{run_experiment_with, AlgorithmId, DomainId, Execution, ExperimentConfig};

fn trials(c: &mut Criterion) {
    let configs = [
        ExperimentConfig {
            trials: 8,
            steps: 100,
            ..ExperimentConfig::new(DomainId::Stocks, AlgorithmId::Alg2)
        },
        ExperimentConfig {
            trials: 8,
            episodes: 50,
            ..ExperimentConfig::new(DomainId::Maze, AlgorithmId::Alg3Kwik)
        },
    ];
    let mut group = c.benchmark_group("trials");
    group.sample_size(10);
    for cfg in &configs {
        let mut modes = vec![("sequential", Execution::Sequential)];
        if cfg!(feature = "parallel") {
            modes.push(("parallel", Execution::Parallel));
        }
        for (name, exec) in modes {
            group.bench_with_input(BenchmarkId::new(name, cfg.domain), cfg, |b, cfg| {
                b.iter(|| run_experiment_with(cfg, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, trials);
criterion_main!(benches);
