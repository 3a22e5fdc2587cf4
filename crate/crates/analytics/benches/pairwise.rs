use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tsvis_analytics::{
    lag_table_with, pairwise_matrix_with, Execution, Measure, MetricId, TimeSeries,
};

fn random_set(n: usize, len: usize) -> Vec<TimeSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..n)
        .map(|i| {
            let mut level = 100.0;
            let values = (0..len)
                .map(|_| {
                    level += rng.random_range(-5.0..5.0);
                    level
                })
                .collect();
            TimeSeries::from_values(format!("board-{i}"), values).unwrap()
        })
        .collect()
}

fn bench_pairwise(c: &mut Criterion) {
    let set = random_set(14, 240);
    let mut group = c.benchmark_group("pairwise_14x240");
    for measure in [
        Measure::Metric(MetricId::Pearson),
        Measure::Metric(MetricId::KendallTauB),
        Measure::Dtw,
    ] {
        for exec in [Execution::Sequential, Execution::Parallel] {
            group.bench_with_input(
                BenchmarkId::new(measure.as_str(), format!("{exec:?}")),
                &exec,
                |b, &exec| b.iter(|| pairwise_matrix_with(&set, measure, exec).unwrap()),
            );
        }
    }
    group.finish();
}

fn bench_lag_table(c: &mut Criterion) {
    let set = random_set(14, 240);
    let mut group = c.benchmark_group("lag_table_14x240");
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| lag_table_with(&set, 28, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_pairwise, bench_lag_table);
criterion_main!(benches);
