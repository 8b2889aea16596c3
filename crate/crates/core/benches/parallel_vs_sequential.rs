use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refwhy_core::stats::{build_correlation_matrix, rf_train_and_importance, Dataset, ForestConfig};
use refwhy_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn synthetic(rows: usize, features: usize, classes: usize) -> (Vec<String>, Vec<Vec<f64>>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let columns: Vec<Vec<f64>> =
        (0..features).map(|_| (0..rows).map(|_| rng.random_range(0.0..100.0f64).floor()).collect()).collect();
    let labels = (0..rows)
        .map(|i| {
            let c = if columns[0][i] > 50.0 { 0 } else { 1 + rng.random_range(0..classes - 1) };
            format!("C{c}")
        })
        .collect();
    ((0..features).map(|f| format!("F{f}")).collect(), columns, labels)
}

fn forest(c: &mut Criterion) {
    let (names, columns, labels) = synthetic(385, 41, 14);
    let data = Dataset::from_columns(names, columns, &labels).unwrap();
    let mut group = c.benchmark_group("random_forest_100_trees");
    group.sample_size(10);
    for (name, execution) in MODES {
        let cfg = ForestConfig { n_trees: 100, seed: 7, execution, ..Default::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| rf_train_and_importance(&data, cfg).unwrap())
        });
    }
    group.finish();
}

fn correlation(c: &mut Criterion) {
    let (names, columns, labels) = synthetic(385, 41, 14);
    let rmcs: Vec<String> = (0..14).map(|i| format!("C{i}")).collect();
    let mut group = c.benchmark_group("correlation_matrix_574_cells");
    group.sample_size(10);
    for (name, execution) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_correlation_matrix(&labels, &rmcs, &names, &columns, 0.05, execution).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, forest, correlation);
criterion_main!(benches);
