use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wdistill::graph_catalog;
use wdistill::lpo::build_protocol_tree;
use wdistill::mc::{monotone_fuzz, simulate, FuzzConfig, MonotoneId, SimConfig};
use wdistill::par::Execution;
use wdistill::standard_w;

const MODES: [(&str, Execution); 2] = [
    ("parallel", Execution::Parallel),
    ("sequential", Execution::Sequential),
];

fn bench_simulate(c: &mut Criterion) {
    let g = graph_catalog("IV", None).unwrap();
    let tree =
        build_protocol_tree(&standard_w(g.labels().to_vec()).unwrap(), &g, 1e-3, 60).unwrap();
    let mut group = c.benchmark_group("simulate_iv_200k");
    group.sample_size(10);
    for (name, exec) in MODES {
        let mut config = SimConfig::new(200_000, 7);
        config.execution = exec;
        group.bench_with_input(BenchmarkId::from_parameter(name), &config, |b, cfg| {
            b.iter(|| simulate(&tree, cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_fuzz(c: &mut Criterion) {
    let mut group = c.benchmark_group("fuzz_tau_1k");
    group.sample_size(10);
    for (name, exec) in MODES {
        let config = FuzzConfig {
            n_states: 1000,
            seed: 7,
            execution: exec,
            ..FuzzConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &config, |b, cfg| {
            b.iter(|| monotone_fuzz(MonotoneId::Tau, cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_simulate, bench_fuzz);
criterion_main!(benches);
